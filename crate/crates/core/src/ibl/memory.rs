use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridworld::{Action, Position};

/// An `(observation, action, outcome)` triple.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub observation: Position,
    pub action: Action,
    pub outcome: f64,
}

impl Instance {
    pub fn new(observation: Position, action: Action, outcome: f64) -> Self {
        Self {
            observation,
            action,
            outcome,
        }
    }

    fn key(&self) -> (Position, Action, u64) {
        // -0.0 and 0.0 are the same outcome.
        let outcome = if self.outcome == 0.0 { 0.0f64 } else { self.outcome };
        (self.observation, self.action, outcome.to_bits())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Slot {
    pub instance: Instance,
    /// Strictly increasing storage times.
    pub occurrences: Vec<u64>,
}

/// Declarative memory: one slot per distinct instance, each with the model
/// times at which it was stored. The clock advances once per stored instance.
#[derive(Clone, Debug, Default)]
pub struct MemoryStore {
    slots: Vec<Slot>,
    by_key: HashMap<(Position, Action, u64), usize>,
    by_choice: HashMap<(Position, Action), Vec<usize>>,
    clock: u64,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn slot(&self, index: usize) -> &Slot {
        &self.slots[index]
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Stores `instance` at the current time, then advances the clock.
    pub fn record(&mut self, instance: Instance) -> usize {
        let now = self.clock;
        let index = match self.by_key.get(&instance.key()) {
            Some(&i) => i,
            None => {
                let i = self.slots.len();
                self.slots.push(Slot {
                    instance,
                    occurrences: Vec::new(),
                });
                self.by_key.insert(instance.key(), i);
                self.by_choice
                    .entry((instance.observation, instance.action))
                    .or_default()
                    .push(i);
                i
            }
        };
        self.slots[index].occurrences.push(now);
        self.clock += 1;
        index
    }

    /// Advances the clock without storing anything.
    pub fn tick(&mut self, by: u64) {
        self.clock += by;
    }

    /// Slots matching `(observation, action)` in creation order.
    pub fn matching(&self, observation: Position, action: Action) -> &[usize] {
        self.by_choice
            .get(&(observation, action))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Actions with at least one stored instance at `observation`.
    pub fn known_actions(&self, observation: Position) -> Vec<Action> {
        Action::ALL
            .into_iter()
            .filter(|a| !self.matching(observation, *a).is_empty())
            .collect()
    }

    pub fn dump(&self, mut writer: impl Write) -> Result<()> {
        for slot in &self.slots {
            let line = DumpLine {
                obs: slot.instance.observation,
                action: slot.instance.action,
                outcome: slot.instance.outcome,
                occurrences: slot.occurrences.clone(),
            };
            serde_json::to_writer(&mut writer, &line)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Restores a dump. The clock resumes one past the latest occurrence.
    pub fn load(reader: impl BufRead) -> Result<Self> {
        let lines: Vec<DumpLine> = crate::trajectory::read_jsonl(reader)?;
        let mut events: Vec<(u64, Instance)> = Vec::new();
        for line in lines {
            if line.occurrences.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Invariant("occurrence times must be strictly increasing".into()));
            }
            let inst = Instance::new(line.obs, line.action, line.outcome);
            events.extend(line.occurrences.into_iter().map(|t| (t, inst)));
        }
        events.sort_by_key(|(t, _)| *t);
        if events.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Invariant("two instances stored at the same time".into()));
        }
        let mut memory = MemoryStore::new();
        for (t, inst) in events {
            memory.tick(t - memory.clock);
            memory.record(inst);
        }
        Ok(memory)
    }
}

#[derive(Serialize, Deserialize)]
struct DumpLine {
    obs: Position,
    action: Action,
    outcome: f64,
    occurrences: Vec<u64>,
}
