use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TaskError;
use crate::rng::SplitMix64;

const RANDOM_NAMES: [&str; 10] = [
    "0QK2Z2", "5F1FT3", "OZ0W0M", "ALCTDF", "DNXXB0", "ION17F", "K0XQNF", "UTNWY7", "JT1GWQ", "1VZS0M",
];
const HUMAN_NAMES: [&str; 10] = [
    "John", "Mary", "Charles", "Elizabeth", "William", "Margaret", "James", "Catherine", "Robert", "Dorothy",
];
const ORDINARY_NAMES: [&str; 10] = [
    "cup", "brick", "anchor", "fork", "bell", "shield", "blade", "horn", "nest", "arrow",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NameSetKind {
    Random,
    Human,
    Ordinary,
}

impl NameSetKind {
    pub const ALL: [NameSetKind; 3] = [NameSetKind::Random, NameSetKind::Human, NameSetKind::Ordinary];

    pub fn names(self) -> &'static [&'static str; 10] {
        match self {
            NameSetKind::Random => &RANDOM_NAMES,
            NameSetKind::Human => &HUMAN_NAMES,
            NameSetKind::Ordinary => &ORDINARY_NAMES,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NameSetKind::Random => "random",
            NameSetKind::Human => "human",
            NameSetKind::Ordinary => "ordinary",
        }
    }
}

impl fmt::Display for NameSetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NameSetKind {
    type Err = TaskError;

    fn from_str(s: &str) -> Result<Self, TaskError> {
        NameSetKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| TaskError::UnknownNameSet(s.to_string()))
    }
}

/// Ten names bound one-to-one to ten squiggle seeds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameSet {
    pub kind: NameSetKind,
    pub names: Vec<String>,
    /// Squiggle seed to name.
    pub assignment: BTreeMap<u64, String>,
}

impl NameSet {
    /// Binds the names of `kind` to `squiggles` in a seeded random order.
    pub fn assign(kind: NameSetKind, squiggles: &[u64], seed: u64) -> Result<Self, TaskError> {
        let names: Vec<String> = kind.names().iter().map(|s| s.to_string()).collect();
        if squiggles.len() != names.len() {
            return Err(TaskError::Config(format!(
                "name set has {} names but {} squiggles were given",
                names.len(),
                squiggles.len()
            )));
        }
        let mut order: Vec<usize> = (0..names.len()).collect();
        SplitMix64::derive(seed, 0x4E41_4D45).shuffle(&mut order);
        let assignment: BTreeMap<u64, String> =
            squiggles.iter().zip(order).map(|(&s, i)| (s, names[i].clone())).collect();
        if assignment.len() != names.len() {
            return Err(TaskError::Config("squiggle seeds must be distinct".into()));
        }
        Ok(Self { kind, names, assignment })
    }

    pub fn name_of(&self, squiggle: u64) -> Option<&str> {
        self.assignment.get(&squiggle).map(String::as_str)
    }

    /// Checks that names are unique and the assignment is a bijection.
    pub fn is_bijection(&self) -> bool {
        let mut names = self.names.clone();
        names.sort();
        names.dedup();
        let mut assigned: Vec<&String> = self.assignment.values().collect();
        assigned.sort();
        names.len() == self.names.len() && assigned.into_iter().eq(names.iter())
    }
}

/// Target text of the description task for `name`.
pub fn describe_name(name: &str) -> String {
    format!(
        "{name} is a single closed shape with a smooth, irregular outline. \
         The shape called {name} keeps the same outline whatever its color, size, position or rotation."
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeds() -> Vec<u64> {
        (100..110).collect()
    }

    #[test]
    fn name_lists() {
        assert_eq!(NameSetKind::Random.names()[0], "0QK2Z2");
        assert_eq!(NameSetKind::Human.names()[1], "Mary");
        assert_eq!(NameSetKind::Ordinary.names()[9], "arrow");
        let re = regex::Regex::new("^[0-9A-Z]{6}$").unwrap();
        assert!(RANDOM_NAMES.iter().all(|n| re.is_match(n)));
    }

    #[test]
    fn assignment_is_bijection() {
        for kind in NameSetKind::ALL {
            let set = NameSet::assign(kind, &seeds(), 3).unwrap();
            assert!(set.is_bijection());
            assert_eq!(set.assignment.len(), 10);
        }
    }

    #[test]
    fn assignment_depends_on_seed_only() {
        let a = NameSet::assign(NameSetKind::Human, &seeds(), 1).unwrap();
        assert_eq!(a, NameSet::assign(NameSetKind::Human, &seeds(), 1).unwrap());
        assert_ne!(a, NameSet::assign(NameSetKind::Human, &seeds(), 2).unwrap());
    }

    #[test]
    fn rejects_wrong_squiggle_count_and_duplicates() {
        assert!(NameSet::assign(NameSetKind::Random, &[1, 2, 3], 0).is_err());
        let mut dup = seeds();
        dup[9] = dup[0];
        assert!(NameSet::assign(NameSetKind::Random, &dup, 0).is_err());
    }

    #[test]
    fn parse_kind() {
        assert_eq!("ordinary".parse::<NameSetKind>().unwrap(), NameSetKind::Ordinary);
        assert!(matches!("celebrity".parse::<NameSetKind>(), Err(TaskError::UnknownNameSet(_))));
    }

    #[test]
    fn description_is_per_name_and_fixed() {
        assert_eq!(describe_name("John"), describe_name("John"));
        assert!(describe_name("cup").starts_with("cup is"));
    }
}
