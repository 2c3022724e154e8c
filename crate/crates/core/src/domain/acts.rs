//! The fixed dialogue-act schema: 11 intents, 16 slots.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intent {
    Request,
    Inform,
    Deny,
    ConfirmQuestion,
    ConfirmAnswer,
    Greeting,
    Closing,
    NotSure,
    MultipleChoice,
    Thanks,
    Welcome,
}

pub const INTENTS: [Intent; 11] = [
    Intent::Request,
    Intent::Inform,
    Intent::Deny,
    Intent::ConfirmQuestion,
    Intent::ConfirmAnswer,
    Intent::Greeting,
    Intent::Closing,
    Intent::NotSure,
    Intent::MultipleChoice,
    Intent::Thanks,
    Intent::Welcome,
];

impl Intent {
    pub fn index(self) -> usize {
        INTENTS.iter().position(|&i| i == self).unwrap()
    }

    pub fn parse(token: &str) -> Result<Self> {
        INTENTS
            .iter()
            .copied()
            .find(|i| i.name() == token)
            .ok_or_else(|| Error::Protocol(format!("unknown intent '{token}'")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Intent::Request => "request",
            Intent::Inform => "inform",
            Intent::Deny => "deny",
            Intent::ConfirmQuestion => "confirm_question",
            Intent::ConfirmAnswer => "confirm_answer",
            Intent::Greeting => "greeting",
            Intent::Closing => "closing",
            Intent::NotSure => "not_sure",
            Intent::MultipleChoice => "multiple_choice",
            Intent::Thanks => "thanks",
            Intent::Welcome => "welcome",
        }
    }
}

impl fmt::Display for Intent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.name(), f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    City,
    Closing,
    Date,
    DistanceConstraints,
    Greeting,
    MovieName,
    NumberOfPeople,
    Price,
    StartTime,
    State,
    TaskComplete,
    Theater,
    TheaterChain,
    Ticket,
    VideoFormat,
    Zip,
}

pub const SLOTS: [Slot; 16] = [
    Slot::City,
    Slot::Closing,
    Slot::Date,
    Slot::DistanceConstraints,
    Slot::Greeting,
    Slot::MovieName,
    Slot::NumberOfPeople,
    Slot::Price,
    Slot::StartTime,
    Slot::State,
    Slot::TaskComplete,
    Slot::Theater,
    Slot::TheaterChain,
    Slot::Ticket,
    Slot::VideoFormat,
    Slot::Zip,
];

/// The seven optional constraint slots, in documented bit order: bit 0 is
/// city, bit 6 is theater_chain. A goal's category id is the presence mask
/// over this list.
pub const OPTIONAL_CONSTRAINT_SLOTS: [Slot; 7] = [
    Slot::City,
    Slot::Date,
    Slot::Theater,
    Slot::NumberOfPeople,
    Slot::StartTime,
    Slot::VideoFormat,
    Slot::TheaterChain,
];

/// Goal-relevant slots in schema order: what the rule agent requests and
/// what the knowledge base stores per showing.
pub const GOAL_SLOTS: [Slot; 8] = [
    Slot::City,
    Slot::Date,
    Slot::MovieName,
    Slot::NumberOfPeople,
    Slot::StartTime,
    Slot::Theater,
    Slot::TheaterChain,
    Slot::VideoFormat,
];

impl Slot {
    pub fn index(self) -> usize {
        SLOTS.iter().position(|&s| s == self).unwrap()
    }

    pub fn parse(token: &str) -> Result<Self> {
        SLOTS
            .iter()
            .copied()
            .find(|s| s.name() == token)
            .ok_or_else(|| Error::Protocol(format!("unknown slot '{token}'")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Slot::City => "city",
            Slot::Closing => "closing",
            Slot::Date => "date",
            Slot::DistanceConstraints => "distanceconstraints",
            Slot::Greeting => "greeting",
            Slot::MovieName => "moviename",
            Slot::NumberOfPeople => "numberofpeople",
            Slot::Price => "price",
            Slot::StartTime => "starttime",
            Slot::State => "state",
            Slot::TaskComplete => "taskcomplete",
            Slot::Theater => "theater",
            Slot::TheaterChain => "theater_chain",
            Slot::Ticket => "ticket",
            Slot::VideoFormat => "video_format",
            Slot::Zip => "zip",
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.name(), f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SlotValue {
    Filled(String),
    #[serde(with = "unknown_marker")]
    Unknown,
}

mod unknown_marker {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("UNKNOWN")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let v = String::deserialize(d)?;
        if v == "UNKNOWN" {
            Ok(())
        } else {
            Err(serde::de::Error::custom("not the UNKNOWN marker"))
        }
    }
}

impl SlotValue {
    pub fn filled(v: impl Into<String>) -> Self {
        SlotValue::Filled(v.into())
    }

    pub fn as_filled(&self) -> Option<&str> {
        match self {
            SlotValue::Filled(v) => Some(v),
            SlotValue::Unknown => None,
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, SlotValue::Unknown)
    }
}

/// One message between agent and user: an intent plus slot assignments.
/// Requested slots carry [`SlotValue::Unknown`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueAct {
    pub intent: Intent,
    pub slots: BTreeMap<Slot, SlotValue>,
}

impl DialogueAct {
    pub fn new(intent: Intent) -> Self {
        Self {
            intent,
            slots: BTreeMap::new(),
        }
    }

    pub fn request(slot: Slot) -> Self {
        let mut act = Self::new(Intent::Request);
        act.slots.insert(slot, SlotValue::Unknown);
        act
    }

    pub fn inform(slot: Slot, value: impl Into<String>) -> Self {
        let mut act = Self::new(Intent::Inform);
        act.slots.insert(slot, SlotValue::filled(value));
        act
    }

    pub fn with_slot(mut self, slot: Slot, value: SlotValue) -> Self {
        self.slots.insert(slot, value);
        self
    }

    /// First slot requested (carrying Unknown), if any.
    pub fn requested_slot(&self) -> Option<Slot> {
        self.slots
            .iter()
            .find(|(_, v)| v.is_unknown())
            .map(|(s, _)| *s)
    }

    /// First (slot, value) pair with a concrete value, if any.
    pub fn informed_pair(&self) -> Option<(Slot, &str)> {
        self.slots
            .iter()
            .find_map(|(s, v)| v.as_filled().map(|val| (*s, val)))
    }

    /// Schema check: a request act must carry at least one UNKNOWN slot.
    pub fn validate(&self) -> Result<()> {
        if self.intent == Intent::Request && self.requested_slot().is_none() {
            return Err(Error::Protocol(
                "a request act must carry at least one UNKNOWN slot".into(),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for DialogueAct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.intent)?;
        let mut first = true;
        for (slot, value) in &self.slots {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            match value {
                SlotValue::Filled(v) => write!(f, "{slot}={v}")?,
                SlotValue::Unknown => write!(f, "{slot}")?,
            }
        }
        write!(f, ")")
    }
}
