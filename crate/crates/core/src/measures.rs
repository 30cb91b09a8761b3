//! Finite signed combinations of Dirac masses and the solution family built
//! from the graph of `f`.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pwl::PwlFunction;
use crate::rational::{self, Rational};

/// `Σ w_i δ_{x_i}` with distinct locations and nonzero integer weights,
/// kept sorted by location.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AtomicMeasure {
    atoms: Vec<(Rational, i64)>,
}

impl AtomicMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn dirac(x: Rational, weight: i64) -> Self {
        let mut m = Self::zero();
        m.add_atom(x, weight);
        m
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = (Rational, i64)>) -> Self {
        let mut m = Self::zero();
        for (x, w) in atoms {
            m.add_atom(x, w);
        }
        m
    }

    /// Adds `w δ_x`, merging with an existing atom at `x`.
    pub fn add_atom(&mut self, x: Rational, w: i64) {
        match self.atoms.binary_search_by(|(y, _)| y.cmp(&x)) {
            Ok(i) => {
                self.atoms[i].1 += w;
                if self.atoms[i].1 == 0 {
                    self.atoms.remove(i);
                }
            }
            Err(i) if w != 0 => self.atoms.insert(i, (x, w)),
            Err(_) => {}
        }
    }

    pub fn atoms(&self) -> &[(Rational, i64)] {
        &self.atoms
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_variation(&self) -> u64 {
        self.atoms.iter().map(|(_, w)| w.unsigned_abs()).sum()
    }

    pub fn total_mass(&self) -> i64 {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    /// `⟨μ, g⟩` in exact arithmetic.
    pub fn pair_exact(&self, g: impl Fn(&Rational) -> Rational) -> Rational {
        self.atoms
            .iter()
            .map(|(x, w)| g(x) * Rational::from_integer(BigInt::from(*w)))
            .fold(Rational::zero(), |acc, v| acc + v)
    }

    /// `⟨μ, g⟩` in floating point, summed left to right.
    pub fn pair_f64(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|(x, w)| *w as f64 * g(rational::to_f64(x))).sum()
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<AtomDoc> = self.atoms.iter().map(|(x, w)| AtomDoc { x: x.clone(), w: *w }).collect();
        serde_json::to_string(&rows).expect("atoms serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rows: Vec<AtomDoc> = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let mut seen = std::collections::BTreeSet::new();
        for r in &rows {
            if !seen.insert(r.x.clone()) {
                return Err(Error::Parse(format!("duplicate atom at {}", rational::format(&r.x))));
            }
        }
        Ok(Self::from_atoms(rows.into_iter().map(|r| (r.x, r.w))))
    }
}

#[derive(Serialize, Deserialize)]
struct AtomDoc {
    #[serde(with = "rational::serde_str")]
    x: Rational,
    w: i64,
}

/// `μ̃_t = Σ_{x ∈ f^-1(t)} sign(f'(x)) δ_x`.
pub fn mu_tilde_at(f: &PwlFunction, t: &Rational) -> Result<AtomicMeasure> {
    let pre = f.preimages(t)?;
    Ok(AtomicMeasure::from_atoms(pre.into_iter().map(|p| (p.location, p.slope_sign as i64))))
}

/// `μ_t = μ̃_t + 1[t ≥ f(1)] δ_1 - 1[t ≥ f(0)] δ_0`, with the endpoints taken
/// from the function's domain.
pub fn mu_full_at(f: &PwlFunction, t: &Rational) -> Result<AtomicMeasure> {
    let mut m = mu_tilde_at(f, t)?;
    let (x0, x1) = f.domain();
    let (x0, x1) = (x0.clone(), x1.clone());
    let f0 = f.values()[0].clone();
    let f1 = f.values().last().unwrap().clone();
    if *t >= f1 {
        m.add_atom(x1, 1);
    }
    if *t >= f0 {
        m.add_atom(x0, -1);
    }
    Ok(m)
}

/// `∫ |μ̃_t| dt` over all levels, from the level sweep.
pub fn l1_mass(f: &PwlFunction) -> Rational {
    f.level_profile()
        .iter()
        .map(|b| (&b.hi - &b.lo) * Rational::from_integer(BigInt::from(b.count)))
        .fold(Rational::zero(), |a, v| a + v)
}

/// Non-critical sample levels: the midpoint of every band between critical
/// values, plus one level below and one above the range.
pub fn sample_levels(f: &PwlFunction) -> Vec<Rational> {
    let c = f.critical_values();
    let two = Rational::from_integer(BigInt::from(2));
    let mut out = vec![&c[0] - rational::one()];
    out.extend(c.windows(2).map(|w| (&w[0] + &w[1]) / &two));
    out.push(c.last().unwrap() + rational::one());
    out
}
