use smallvec::SmallVec;

/// Weight of each φ variable.
pub const PHI_WEIGHT: u32 = 2;
/// Weight of each μ variable.
pub const MU_WEIGHT: u32 = 2;

/// Multi-index over the `x | φ | μ` variables, ordered graded-lexicographically.
///
/// The derived ordering compares the weighted degree first, then the raw
/// entries in the order `x`, `φ`, `μ`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Exponent {
    wt: u32,
    d: u16,
    e: SmallVec<[u16; 12]>,
}

impl Exponent {
    pub fn zero(d: usize, l: usize) -> Self {
        Exponent {
            wt: 0,
            d: d as u16,
            e: SmallVec::from_elem(0, 2 * d + l),
        }
    }

    pub fn new(x: &[u32], phi: &[u32], mu: &[u32]) -> Self {
        assert_eq!(x.len(), phi.len(), "x and φ parts must have equal length");
        let mut e = SmallVec::with_capacity(x.len() * 2 + mu.len());
        e.extend(x.iter().map(|&v| v as u16));
        e.extend(phi.iter().map(|&v| v as u16));
        e.extend(mu.iter().map(|&v| v as u16));
        let mut out = Exponent {
            wt: 0,
            d: x.len() as u16,
            e,
        };
        out.wt = out.compute_weight();
        out
    }

    pub fn from_x(x: &[u32], l: usize) -> Self {
        Exponent::new(x, &vec![0; x.len()], &vec![0; l])
    }

    fn compute_weight(&self) -> u32 {
        let d = self.d as usize;
        let x: u32 = self.e[..d].iter().map(|&v| v as u32).sum();
        let rest: u32 = self.e[d..].iter().map(|&v| v as u32).sum();
        x + PHI_WEIGHT * rest
    }

    pub fn weight(&self) -> u32 {
        self.wt
    }

    pub fn dim(&self) -> usize {
        self.d as usize
    }

    pub fn mu_count(&self) -> usize {
        self.e.len() - 2 * self.d as usize
    }

    pub fn x(&self) -> &[u16] {
        &self.e[..self.d as usize]
    }

    pub fn phi(&self) -> &[u16] {
        &self.e[self.d as usize..2 * self.d as usize]
    }

    pub fn mu(&self) -> &[u16] {
        &self.e[2 * self.d as usize..]
    }

    pub fn x_vec(&self) -> Vec<u32> {
        self.x().iter().map(|&v| v as u32).collect()
    }

    pub fn phi_vec(&self) -> Vec<u32> {
        self.phi().iter().map(|&v| v as u32).collect()
    }

    pub fn mu_vec(&self) -> Vec<u32> {
        self.mu().iter().map(|&v| v as u32).collect()
    }

    pub fn x_degree(&self) -> u32 {
        self.x().iter().map(|&v| v as u32).sum()
    }

    pub fn phi_degree(&self) -> u32 {
        self.phi().iter().map(|&v| v as u32).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.wt == 0
    }

    pub fn add(&self, other: &Exponent) -> Exponent {
        debug_assert_eq!(self.e.len(), other.e.len());
        Exponent {
            wt: self.wt + other.wt,
            d: self.d,
            e: self.e.iter().zip(&other.e).map(|(a, b)| a + b).collect(),
        }
    }

    /// `self - other` when `other` divides `self`.
    pub fn checked_sub(&self, other: &Exponent) -> Option<Exponent> {
        let mut e = SmallVec::with_capacity(self.e.len());
        for (a, b) in self.e.iter().zip(&other.e) {
            e.push(a.checked_sub(*b)?);
        }
        Some(Exponent {
            wt: self.wt - other.wt,
            d: self.d,
            e,
        })
    }

    pub fn divides(&self, other: &Exponent) -> bool {
        self.e.iter().zip(&other.e).all(|(a, b)| a <= b)
    }

    /// Position of a variable in the flat `x | φ | μ` layout.
    pub(crate) fn slot(&self, var: Var) -> usize {
        let d = self.d as usize;
        match var {
            Var::X(i) => i,
            Var::Phi(i) => d + i,
            Var::Mu(j) => 2 * d + j,
        }
    }

    pub fn power_of(&self, var: Var) -> u32 {
        self.e[self.slot(var)] as u32
    }

    /// Exponent with the power of `var` lowered by one, with the old power.
    pub fn lower(&self, var: Var) -> Option<(Exponent, u32)> {
        let s = self.slot(var);
        let k = self.e[s];
        if k == 0 {
            return None;
        }
        let mut out = self.clone();
        out.e[s] -= 1;
        out.wt -= var.weight();
        Some((out, k as u32))
    }

    pub fn raise(&self, var: Var, by: u32) -> Exponent {
        let s = self.slot(var);
        let mut out = self.clone();
        out.e[s] += by as u16;
        out.wt += var.weight() * by;
        out
    }

    /// Same exponent with the φ part cleared.
    pub fn without_phi(&self) -> Exponent {
        let d = self.d as usize;
        let mut out = self.clone();
        for v in &mut out.e[d..2 * d] {
            *v = 0;
        }
        out.wt = out.compute_weight();
        out
    }
}

/// A single ring variable.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, PartialOrd, Ord)]
pub enum Var {
    X(usize),
    Phi(usize),
    Mu(usize),
}

impl Var {
    pub fn weight(self) -> u32 {
        match self {
            Var::X(_) => 1,
            Var::Phi(_) => PHI_WEIGHT,
            Var::Mu(_) => MU_WEIGHT,
        }
    }
}
