use serde::{Deserialize, Serialize};

use crate::kv::{KvDoc, KvError};
use crate::navigation::NavConfig;

/// Which unit stat a lost combat round is charged to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CombatStat {
    Health,
    Energy,
}

impl std::str::FromStr for CombatStat {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "health" => Ok(CombatStat::Health),
            "energy" => Ok(CombatStat::Energy),
            _ => Err(()),
        }
    }
}

/// How the "objective visible" perception is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjectiveSense {
    /// The army has located the rival flag at some point.
    ArmyKnowledge,
    /// The rival flag is inside the unit's own visual range right now.
    UnitVisibility,
}

impl std::str::FromStr for ObjectiveSense {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "knowledge" | "army" => Ok(ObjectiveSense::ArmyKnowledge),
            "visible" | "unit" => Ok(ObjectiveSense::UnitVisibility),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    /// Visual range radius in cells (Euclidean).
    pub visual_range_phi: f64,
    pub max_health: i32,
    pub max_energy: i32,
    pub semi_impassable_energy_cost: i32,
    pub combat_damage: i32,
    pub max_turns: u32,
    pub combat_damage_stat: CombatStat,
    pub objective_sense: ObjectiveSense,
    pub nav: NavConfig,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            visual_range_phi: 5.0,
            max_health: 100,
            max_energy: 1000,
            semi_impassable_energy_cost: 1,
            combat_damage: 1,
            max_turns: 10_000,
            combat_damage_stat: CombatStat::Health,
            objective_sense: ObjectiveSense::ArmyKnowledge,
            nav: NavConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error(transparent)]
    Kv(#[from] KvError),
    #[error("`{0}` must be strictly positive")]
    NotPositive(&'static str),
    #[error("`{0}` out of range")]
    OutOfRange(&'static str),
}

impl WorldConfig {
    /// Parse the flat `key = value` config format. Missing keys keep their
    /// defaults; unknown keys are rejected.
    pub fn from_kv_text(text: &str) -> Result<WorldConfig, ConfigError> {
        let mut doc = KvDoc::parse(text)?;
        let mut c = WorldConfig::default();
        doc.take_into("visual_range_phi", &mut c.visual_range_phi)?;
        doc.take_into("max_health", &mut c.max_health)?;
        doc.take_into("max_energy", &mut c.max_energy)?;
        doc.take_into("semi_impassable_energy_cost", &mut c.semi_impassable_energy_cost)?;
        doc.take_into("combat_damage", &mut c.combat_damage)?;
        doc.take_into("max_turns", &mut c.max_turns)?;
        doc.take_into("combat_damage_stat", &mut c.combat_damage_stat)?;
        doc.take_into("objective_sense", &mut c.objective_sense)?;
        c.nav.take_from(&mut doc)?;
        doc.finish()?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_kv_text(&self) -> String {
        let stat = match self.combat_damage_stat {
            CombatStat::Health => "health",
            CombatStat::Energy => "energy",
        };
        let sense = match self.objective_sense {
            ObjectiveSense::ArmyKnowledge => "knowledge",
            ObjectiveSense::UnitVisibility => "visible",
        };
        let mut s = format!(
            "visual_range_phi = {}\nmax_health = {}\nmax_energy = {}\n\
             semi_impassable_energy_cost = {}\ncombat_damage = {}\nmax_turns = {}\n\
             combat_damage_stat = {}\nobjective_sense = {}\n",
            self.visual_range_phi,
            self.max_health,
            self.max_energy,
            self.semi_impassable_energy_cost,
            self.combat_damage,
            self.max_turns,
            stat,
            sense
        );
        s.push_str(&self.nav.to_kv_text());
        s
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.visual_range_phi > 0.0 && self.visual_range_phi.is_finite()) {
            return Err(ConfigError::NotPositive("visual_range_phi"));
        }
        for (name, v) in [
            ("max_health", self.max_health),
            ("max_energy", self.max_energy),
            ("semi_impassable_energy_cost", self.semi_impassable_energy_cost),
            ("combat_damage", self.combat_damage),
        ] {
            if v <= 0 {
                return Err(ConfigError::NotPositive(name));
            }
        }
        if self.max_turns == 0 {
            return Err(ConfigError::NotPositive("max_turns"));
        }
        self.nav.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = WorldConfig::default();
        assert_eq!(c.max_health, 100);
        assert_eq!(c.max_energy, 1000);
        assert_eq!(c.semi_impassable_energy_cost, 1);
        assert_eq!(c.combat_damage, 1);
        assert_eq!(c.max_turns, 10_000);
        assert_eq!(c.combat_damage_stat, CombatStat::Health);
        c.validate().unwrap();
    }

    #[test]
    fn parses_flat_text() {
        let c = WorldConfig::from_kv_text(
            "max_turns = 1500\ncombat_damage_stat = energy\nnav.guard_radius = 4\n",
        )
        .unwrap();
        assert_eq!(c.max_turns, 1500);
        assert_eq!(c.combat_damage_stat, CombatStat::Energy);
        assert_eq!(c.nav.guard_radius, 4);
        assert_eq!(WorldConfig::from_kv_text(&c.to_kv_text()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_values() {
        assert_eq!(
            WorldConfig::from_kv_text("max_health = 0"),
            Err(ConfigError::NotPositive("max_health"))
        );
        assert!(matches!(
            WorldConfig::from_kv_text("bogus = 1"),
            Err(ConfigError::Kv(KvError::UnknownKey(_)))
        ));
    }
}
