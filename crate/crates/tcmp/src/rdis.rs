//! Recursively generated doubly indexed sequences.
//!
//! An initial block `{γ_ij : 0 ≤ i, j ≤ r}` together with a
//! characteristic polynomial `P = z^(r+1) - Σ a_lk conj(z)^l z^k`
//! (tail of total degree at most `r`) determines every `γ_ij`:
//! indices with `j > r` unfold through the tail,
//!
//! ```text
//! γ_{i,j} = Σ a_lk γ_{l+i, j-(r+1)+k},      j ≥ r + 1,
//! ```
//!
//! and indices with `i > r ≥ j` come from Hermitian symmetry
//! `γ_ij = conj(γ_ji)`. Each unfolding step lowers the second index by
//! at least one while the flip lowers the offending side, so the
//! recursion bottoms out in the block. Values are memoized behind a
//! mutex; the lock is never held across a recursive call, so a shared
//! sequence can be read from many threads.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::poly::{charpoly_parts, BivarPoly};
use crate::tol::Tolerances;
use crate::C64;

/// Hermitian initial block `{γ_ij : 0 ≤ i, j ≤ r}`.
#[derive(Debug, Clone)]
pub struct InitialBlock {
    r: u32,
    entries: Vec<C64>,
}

impl InitialBlock {
    /// Build from the upper triangle `{(i, j) → γ_ij : i ≤ j ≤ r}`; the
    /// lower triangle is completed by conjugation. `γ_00` must be real
    /// and strictly positive, and any redundant lower-triangle entries
    /// supplied must match their conjugates.
    pub fn new(r: u32, entries: &HashMap<(u32, u32), C64>) -> Result<Self> {
        let n = (r + 1) as usize;
        let mut table = vec![None; n * n];
        for (&(i, j), &v) in entries {
            if i > r || j > r {
                return Err(Error::InvalidInitialBlock(format!(
                    "entry ({i},{j}) outside block of order {r}"
                )));
            }
            table[i as usize * n + j as usize] = Some(v);
        }
        let mut full = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in i..n {
                let upper = table[i * n + j];
                let lower = table[j * n + i];
                let v = match (upper, lower) {
                    (Some(u), None) => u,
                    (None, Some(l)) => l.conj(),
                    (Some(u), Some(l)) => {
                        if (u - l.conj()).norm() > 1e-12 * (1.0 + u.norm()) {
                            return Err(Error::InvalidInitialBlock(format!(
                                "γ_{i}{j} and γ_{j}{i} are not conjugate"
                            )));
                        }
                        u
                    }
                    (None, None) => {
                        return Err(Error::InvalidInitialBlock(format!(
                            "missing entry γ_{i}{j}"
                        )))
                    }
                };
                full[i * n + j] = v;
                full[j * n + i] = v.conj();
            }
        }
        let g00 = full[0];
        if g00.im.abs() > 1e-12 * g00.re.abs() || g00.re <= 0.0 {
            return Err(Error::InvalidInitialBlock(format!(
                "γ_00 = {g00} must be real and positive"
            )));
        }
        Ok(InitialBlock { r, entries: full })
    }

    /// Build by evaluating `f(i, j)` on the upper triangle.
    pub fn from_fn<F: FnMut(u32, u32) -> C64>(r: u32, mut f: F) -> Result<Self> {
        let mut map = HashMap::new();
        for i in 0..=r {
            for j in i..=r {
                map.insert((i, j), f(i, j));
            }
        }
        InitialBlock::new(r, &map)
    }

    pub fn order(&self) -> u32 {
        self.r
    }

    pub fn get(&self, i: u32, j: u32) -> C64 {
        let n = (self.r + 1) as usize;
        self.entries[i as usize * n + j as usize]
    }
}

/// Result of a truncated characteristic-membership test: the largest
/// relative Riesz residual `|Λ(conj(z)^i z^j q)|` over all shifts with
/// `i + j ≤ level`, each normalized by `1 +` the largest moment it
/// touched.
#[derive(Debug, Clone, Copy)]
pub struct CharTest {
    pub passes: bool,
    pub max_residual: f64,
}

/// A recursively generated doubly indexed sequence.
pub struct Rdis {
    block: InitialBlock,
    charpoly: BivarPoly,
    tail: BivarPoly,
    memo: Mutex<HashMap<(u32, u32), C64>>,
}

impl Rdis {
    /// `charpoly` must be `z^(r+1)` minus a tail of total degree at
    /// most `r`, where `r` is the order of `block`.
    pub fn new(block: InitialBlock, charpoly: BivarPoly) -> Result<Self> {
        let (d, tail) = charpoly_parts(&charpoly)?;
        if d != block.order() + 1 {
            return Err(Error::InvalidInitialBlock(format!(
                "characteristic degree {d} needs a block of order {}, got {}",
                d - 1,
                block.order()
            )));
        }
        Ok(Rdis {
            block,
            charpoly,
            tail,
            memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn charpoly(&self) -> &BivarPoly {
        &self.charpoly
    }

    /// Leading degree `r + 1` of the characteristic polynomial.
    pub fn char_degree(&self) -> u32 {
        self.block.order() + 1
    }

    pub fn initial_block(&self) -> &InitialBlock {
        &self.block
    }

    /// The sequence value `γ_ij`, generated on demand.
    pub fn gamma(&self, i: u32, j: u32) -> C64 {
        let r = self.block.order();
        if i <= r && j <= r {
            return self.block.get(i, j);
        }
        if let Some(v) = self.memo.lock().unwrap().get(&(i, j)) {
            return *v;
        }
        let v = if j > r {
            let base = j - (r + 1);
            self.tail
                .terms()
                .map(|(m, c)| c * self.gamma(m.i + i, base + m.j))
                .sum()
        } else {
            self.gamma(j, i).conj()
        };
        self.memo.lock().unwrap().insert((i, j), v);
        v
    }

    /// Riesz functional `Λ(p) = Σ c_ij γ_ij`.
    pub fn riesz(&self, p: &BivarPoly) -> C64 {
        p.terms().map(|(m, c)| c * self.gamma(m.i, m.j)).sum()
    }

    /// `Λ(p)` together with the scale `1 + max |γ| touched`, the
    /// denominator for relative residuals.
    pub fn riesz_scaled(&self, p: &BivarPoly) -> (C64, f64) {
        let mut acc = C64::new(0.0, 0.0);
        let mut max_gamma = 0.0f64;
        for (m, c) in p.terms() {
            let g = self.gamma(m.i, m.j);
            max_gamma = max_gamma.max(g.norm());
            acc += c * g;
        }
        (acc, 1.0 + max_gamma)
    }

    /// Test whether `q` annihilates the sequence through shifted Riesz
    /// functionals: `Λ(conj(z)^i z^j q) ≈ 0` for all `i + j ≤ level`.
    pub fn is_characteristic(&self, q: &BivarPoly, level: u32, tols: &Tolerances) -> CharTest {
        let mut max_residual = 0.0f64;
        let coeff_scale = q.max_coeff().max(1.0);
        for i in 0..=level {
            for j in 0..=(level - i) {
                let shifted = q.mul_term(i, j, C64::new(1.0, 0.0));
                let (v, scale) = self.riesz_scaled(&shifted);
                max_residual = max_residual.max(v.norm() / (scale * coeff_scale));
            }
        }
        CharTest {
            passes: max_residual <= tols.membership,
            max_residual,
        }
    }
}

impl std::fmt::Debug for Rdis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Rdis")
            .field("order", &self.block.order())
            .field("charpoly", &format!("{}", self.charpoly))
            .finish()
    }
}
