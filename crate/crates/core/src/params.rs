use core::fmt;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Population group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupId {
    S,
    I,
    R,
    C,
}

impl GroupId {
    pub const ALL: [GroupId; 4] = [GroupId::S, GroupId::I, GroupId::R, GroupId::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            GroupId::S => "S",
            GroupId::I => "I",
            GroupId::R => "R",
            GroupId::C => "C",
        }
    }

    pub fn parse(s: &str) -> Option<GroupId> {
        match s {
            "S" => Some(GroupId::S),
            "I" => Some(GroupId::I),
            "R" => Some(GroupId::R),
            "C" => Some(GroupId::C),
            _ => None,
        }
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One value per group; total over [`GroupId`] by construction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerGroup<T>(pub [T; 4]);

impl<T> PerGroup<T> {
    pub fn from_fn(mut f: impl FnMut(GroupId) -> T) -> Self {
        PerGroup([f(GroupId::S), f(GroupId::I), f(GroupId::R), f(GroupId::C)])
    }

    pub fn map<U>(&self, mut f: impl FnMut(GroupId, &T) -> U) -> PerGroup<U> {
        PerGroup::from_fn(|g| f(g, &self[g]))
    }

    pub fn try_map<U, E>(&self, mut f: impl FnMut(GroupId, &T) -> core::result::Result<U, E>) -> core::result::Result<PerGroup<U>, E> {
        Ok(PerGroup([
            f(GroupId::S, &self.0[0])?,
            f(GroupId::I, &self.0[1])?,
            f(GroupId::R, &self.0[2])?,
            f(GroupId::C, &self.0[3])?,
        ]))
    }

    pub fn iter(&self) -> impl Iterator<Item = (GroupId, &T)> {
        GroupId::ALL.into_iter().zip(self.0.iter())
    }
}

impl<T: Clone> PerGroup<T> {
    pub fn splat(value: T) -> Self {
        PerGroup([value.clone(), value.clone(), value.clone(), value])
    }
}

impl<T> Index<GroupId> for PerGroup<T> {
    type Output = T;
    fn index(&self, g: GroupId) -> &T {
        &self.0[g.index()]
    }
}

impl<T> IndexMut<GroupId> for PerGroup<T> {
    fn index_mut(&mut self, g: GroupId) -> &mut T {
        &mut self.0[g.index()]
    }
}

/// Transition rates of the SIRC model (per day; `epsilon` is a probability).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpidemicParams {
    /// Contact/transmission rate.
    pub beta: f64,
    /// Recovery rate.
    pub gamma: f64,
    /// Rate R → C (loss of total immunity).
    pub delta: f64,
    /// Rate C → S (loss of cross-immunity).
    pub mu: f64,
    /// Reinfection probability of a cross-immune individual.
    pub epsilon: f64,
}

impl EpidemicParams {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
            ("mu", self.mu),
            ("epsilon", self.epsilon),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::param(name, value, "must be finite and >= 0"));
            }
        }
        if self.epsilon > 1.0 {
            return Err(Error::param("epsilon", self.epsilon, "out of [0,1]"));
        }
        Ok(())
    }
}

/// Cost and diffusion constants of one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupCosts {
    /// Diffusion `σ²`.
    pub sigma2: f64,
    /// State-cost scale `c₁`.
    pub c1: f64,
    /// Crowd-influence coefficient `c₂ ∈ [0,1]`.
    pub c2: f64,
    /// Corrective-control penalty `c₃ ∈ [0,2]`.
    pub c3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfgParams {
    pub groups: PerGroup<GroupCosts>,
    /// Include the terminal `∫ m_I(T)²/2` term.
    pub terminal_cost: bool,
}

impl MfgParams {
    pub fn validate(&self) -> Result<()> {
        for (g, costs) in self.groups.iter() {
            let check = |key: &str, value: f64, lo: f64, hi: f64, reason| {
                if value.is_finite() && value >= lo && value <= hi {
                    Ok(())
                } else {
                    Err(Error::param(alloc::format!("{key}[{g}]"), value, reason))
                }
            };
            check("sigma2", costs.sigma2, 0.0, f64::MAX, "must be finite and >= 0")?;
            check("c1", costs.c1, 0.0, f64::MAX, "must be finite and >= 0")?;
            check("c2", costs.c2, 0.0, 1.0, "c2 out of [0,1]")?;
            check("c3", costs.c3, 0.0, 2.0, "c3 out of [0,2]")?;
        }
        Ok(())
    }

    pub fn sigma2(&self) -> PerGroup<f64> {
        self.groups.map(|_, c| c.sigma2)
    }
}
