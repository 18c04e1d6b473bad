use super::{HostingPolicy, PolicyError};
use crate::model::HostingLadder;

/// Hosts the same level in every slot.
#[derive(Debug, Clone)]
pub struct StaticLevel {
    level: usize,
}

impl StaticLevel {
    pub fn new(level: usize, ladder: &HostingLadder) -> Result<Self, PolicyError> {
        if level >= ladder.len() {
            return Err(PolicyError::LevelOutOfRange {
                index: level,
                levels: ladder.len(),
            });
        }
        Ok(Self { level })
    }
}

impl HostingPolicy for StaticLevel {
    fn decide(&mut self, _t: usize) -> usize {
        self.level
    }

    fn observe(&mut self, _t: usize, _requests: f64) {}
}
