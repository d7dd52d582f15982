//! The server's view of a trace: who received something, and when.
//!
//! [`ObservedEvent`] has no sender or kind field, so nothing downstream of
//! [`observe`] can use them.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::traffic::TrafficTrace;
use crate::{Error, Result, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedEvent {
    pub timestamp: f64,
    pub recipient: UserId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservedLog {
    events: Vec<ObservedEvent>,
    horizon: f64,
}

impl ObservedLog {
    /// Fails with [`Error::Unsorted`] if timestamps decrease.
    pub fn new(events: Vec<ObservedEvent>, horizon: f64) -> Result<Self> {
        if let Some(i) = events
            .windows(2)
            .position(|w| w[1].timestamp < w[0].timestamp)
        {
            return Err(Error::Unsorted(i + 1));
        }
        Ok(ObservedLog { events, horizon })
    }

    pub fn events(&self) -> &[ObservedEvent] {
        &self.events
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Events with `start <= timestamp < end`.
    pub fn window(&self, start: f64, end: f64) -> &[ObservedEvent] {
        let lo = self.events.partition_point(|e| e.timestamp < start);
        let hi = self.events.partition_point(|e| e.timestamp < end);
        &self.events[lo..hi.max(lo)]
    }

    /// Reads `timestamp,recipient`. Without an explicit horizon the last
    /// timestamp is used.
    pub fn read_csv<R: Read>(r: R, horizon: Option<f64>) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let events = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<ObservedEvent>, _>>()?;
        let horizon =
            horizon.unwrap_or_else(|| events.last().map_or(0.0, |e: &ObservedEvent| e.timestamp));
        Self::new(events, horizon)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        if self.events.is_empty() {
            out.write_record(["timestamp", "recipient"])?;
        }
        for e in &self.events {
            out.serialize(e)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Projects a trace onto `(timestamp, recipient)`, preserving order and length.
pub fn observe(trace: &TrafficTrace) -> ObservedLog {
    ObservedLog {
        events: trace
            .events
            .iter()
            .map(|e| ObservedEvent {
                timestamp: e.timestamp,
                recipient: e.recipient,
            })
            .collect(),
        horizon: trace.horizon,
    }
}
