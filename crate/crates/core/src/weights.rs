//! Six-vertex Boltzmann weights and the face (IRF) weight table built from them.
//!
//! Heights live on the corners of a face and take the values `+1` and `-1`.
//! The corner order `(a, b, c, d)` runs around the face, and the weight class
//! is fixed by whether opposite corners agree: `(a=c, b=d)` gives 𝔞,
//! `(a=c, b≠d)` gives 𝔠, `(a≠c, b≠d)` gives 𝔟 and `(a≠c, b=d)` gives 𝔡.

use crate::error::{IronfaceError, Result};
use num_complex::Complex64;

/// Smallest admissible magnitude of the weight denominator.
pub const SINGULAR_GUARD: f64 = 1e-14;

/// Parameterization family of the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeKind {
    /// |Δ| ≤ 1, trigonometric weights, Δ = cos γ.
    Critical,
    /// Δ > 1, hyperbolic weights, Δ = cosh γ.
    Massive,
}

/// Regime together with its crossing parameter γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub kind: RegimeKind,
    pub gamma: f64,
}

impl Regime {
    pub fn critical(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < std::f64::consts::PI) {
            return Err(IronfaceError::InvalidParameter(format!(
                "critical regime needs 0 < gamma < pi, got {gamma}"
            )));
        }
        Ok(Self { kind: RegimeKind::Critical, gamma })
    }

    pub fn massive(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(IronfaceError::InvalidParameter(format!(
                "massive regime needs gamma > 0, got {gamma}"
            )));
        }
        Ok(Self { kind: RegimeKind::Massive, gamma })
    }

    /// Maps an anisotropy Δ to its regime. Δ = 1 is treated as the limit of the
    /// critical family and is rejected because γ would vanish.
    pub fn from_delta(delta: f64) -> Result<Self> {
        if !delta.is_finite() || delta < -1.0 {
            return Err(IronfaceError::InvalidParameter(format!(
                "anisotropy {delta} is below -1 (outside the supported regimes)"
            )));
        }
        if delta <= 1.0 {
            if delta == 1.0 {
                return Err(IronfaceError::InvalidParameter(
                    "delta = 1 gives gamma = 0, which has no finite parameterization".into(),
                ));
            }
            // Δ = -1 would give γ = π; keep it out of the open interval.
            Self::critical(delta.acos())
        } else {
            Self::massive(delta.acosh())
        }
    }

    pub fn delta(&self) -> f64 {
        match self.kind {
            RegimeKind::Critical => self.gamma.cos(),
            RegimeKind::Massive => self.gamma.cosh(),
        }
    }

    pub fn is_critical(&self) -> bool {
        self.kind == RegimeKind::Critical
    }

    /// sin or sinh depending on the regime.
    pub fn trig(&self, z: Complex64) -> Complex64 {
        match self.kind {
            RegimeKind::Critical => z.sin(),
            RegimeKind::Massive => z.sinh(),
        }
    }

    /// The single-variable function 𝔟(z) = s(z)/s(z+γ), with s = sin or sinh.
    pub fn b_fn(&self, z: Complex64) -> Result<Complex64> {
        let den = self.trig(z + self.gamma);
        guard(z, den)?;
        Ok(self.trig(z) / den)
    }
}

fn guard(lambda: Complex64, den: Complex64) -> Result<()> {
    if den.norm() < SINGULAR_GUARD || !den.is_finite() {
        return Err(IronfaceError::SingularSpectralParameter {
            lambda: format!("{lambda}"),
            magnitude: den.norm(),
        });
    }
    Ok(())
}

/// The four vertex weights (𝔡 is zero for the six-vertex model).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexWeights {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl VertexWeights {
    /// (a² + b² − c² − d²)/(2(ab + cd)), the anisotropy encoded by the weights.
    pub fn delta(&self) -> Complex64 {
        (self.a * self.a + self.b * self.b - self.c * self.c - self.d * self.d)
            / (2.0 * (self.a * self.b + self.c * self.d))
    }
}

/// Six-vertex weights with the normalization 𝔞 = 1.
pub fn vertex_weights(lambda: Complex64, regime: &Regime) -> Result<VertexWeights> {
    let den = regime.trig(lambda + regime.gamma);
    guard(lambda, den)?;
    Ok(VertexWeights {
        a: Complex64::new(1.0, 0.0),
        b: regime.trig(lambda) / den,
        c: regime.trig(Complex64::new(regime.gamma, 0.0)) / den,
        d: Complex64::new(0.0, 0.0),
    })
}

/// Class of a face configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightClass {
    A,
    B,
    C,
    D,
}

/// Class of the corner configuration `(a, b, c, d)`.
pub fn classify(a: i8, b: i8, c: i8, d: i8) -> WeightClass {
    match (a == c, b == d) {
        (true, true) => WeightClass::A,
        (true, false) => WeightClass::C,
        (false, false) => WeightClass::B,
        (false, true) => WeightClass::D,
    }
}

#[inline]
fn height_bit(h: i8) -> usize {
    usize::from(h < 0)
}

/// Index of a corner configuration inside a table: `+1` maps to bit 0.
#[inline]
pub fn corner_index(a: i8, b: i8, c: i8, d: i8) -> usize {
    (height_bit(a) << 3) | (height_bit(b) << 2) | (height_bit(c) << 1) | height_bit(d)
}

/// Heights of a table index, inverse of [`corner_index`].
pub fn corners_of(index: usize) -> [i8; 4] {
    let h = |bit: usize| if (index >> bit) & 1 == 0 { 1 } else { -1 };
    [h(3), h(2), h(1), h(0)]
}

/// All 16 face weights at one spectral parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceWeightTable {
    pub lambda: Complex64,
    pub vertex: VertexWeights,
    pub entries: [Complex64; 16],
}

impl FaceWeightTable {
    #[inline]
    pub fn w(&self, a: i8, b: i8, c: i8, d: i8) -> Complex64 {
        self.entries[corner_index(a, b, c, d)]
    }

    /// Weight with the marker moved by a quarter turn, used by the conjugated
    /// transfer matrix: W̄(a,b,c,d) = W(b,c,d,a).
    #[inline]
    pub fn w_bar(&self, a: i8, b: i8, c: i8, d: i8) -> Complex64 {
        self.w(b, c, d, a)
    }

    /// How many entries fall in each class, ordered 𝔞, 𝔟, 𝔠, 𝔡.
    pub fn class_counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for idx in 0..16 {
            let [a, b, c, d] = corners_of(idx);
            let slot = match classify(a, b, c, d) {
                WeightClass::A => 0,
                WeightClass::B => 1,
                WeightClass::C => 2,
                WeightClass::D => 3,
            };
            counts[slot] += 1;
        }
        counts
    }
}

/// Builds the face table. `eight_vertex_d` fills the 𝔡 class; it is zero for
/// the six-vertex model.
pub fn face_weight_table(
    lambda: Complex64,
    regime: &Regime,
    eight_vertex_d: Option<f64>,
) -> Result<FaceWeightTable> {
    let mut vertex = vertex_weights(lambda, regime)?;
    if let Some(d) = eight_vertex_d {
        vertex.d = Complex64::new(d, 0.0);
    }
    let mut entries = [Complex64::new(0.0, 0.0); 16];
    for (idx, slot) in entries.iter_mut().enumerate() {
        let [a, b, c, d] = corners_of(idx);
        *slot = match classify(a, b, c, d) {
            WeightClass::A => vertex.a,
            WeightClass::B => vertex.b,
            WeightClass::C => vertex.c,
            WeightClass::D => vertex.d,
        };
    }
    Ok(FaceWeightTable { lambda, vertex, entries })
}

const HEIGHTS: [i8; 2] = [1, -1];

/// Largest violation of the face Yang–Baxter equation over the 64 external
/// height choices.
pub fn check_yang_baxter(lambda: Complex64, mu: Complex64, regime: &Regime) -> Result<f64> {
    let t_diff = face_weight_table(lambda - mu, regime, None)?;
    let t_mu = face_weight_table(mu, regime, None)?;
    let t_lam = face_weight_table(lambda, regime, None)?;
    let mut worst: f64 = 0.0;
    for a in HEIGHTS {
        for b in HEIGHTS {
            for c in HEIGHTS {
                for d in HEIGHTS {
                    for e in HEIGHTS {
                        for f in HEIGHTS {
                            let mut lhs = Complex64::new(0.0, 0.0);
                            let mut rhs = Complex64::new(0.0, 0.0);
                            for i in HEIGHTS {
                                lhs += t_diff.w(a, b, i, f) * t_mu.w(i, d, e, f) * t_lam.w(b, c, d, i);
                                rhs += t_lam.w(a, i, e, f) * t_mu.w(b, c, i, a) * t_diff.w(i, c, d, e);
                            }
                            worst = worst.max((lhs - rhs).norm());
                        }
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// Checks Σᵢ W(a,b,i,d|λ) W(i,b,c,d|−λ) = ρ(λ)ρ(−λ) δ_ac. Returns the largest
/// deviation and the fitted product ρ(λ)ρ(−λ).
pub fn check_unitarity(lambda: Complex64, regime: &Regime) -> Result<(f64, Complex64)> {
    let plus = face_weight_table(lambda, regime, None)?;
    let minus = face_weight_table(-lambda, regime, None)?;
    let mut diagonal = Vec::with_capacity(8);
    let mut worst: f64 = 0.0;
    for a in HEIGHTS {
        for b in HEIGHTS {
            for c in HEIGHTS {
                for d in HEIGHTS {
                    let s: Complex64 = HEIGHTS.iter().map(|&i| plus.w(a, b, i, d) * minus.w(i, b, c, d)).sum();
                    if a == c {
                        diagonal.push(s);
                    } else {
                        worst = worst.max(s.norm());
                    }
                }
            }
        }
    }
    let rho = diagonal.iter().sum::<Complex64>() / diagonal.len() as f64;
    for s in &diagonal {
        worst = worst.max((s - rho).norm());
    }
    Ok((worst, rho))
}

/// Largest deviation of W(a,b,c,d|0) from ρ(0)δ_ac, with ρ(0) read off the
/// 𝔞 entry.
pub fn check_initial_condition(regime: &Regime) -> Result<f64> {
    let table = face_weight_table(Complex64::new(0.0, 0.0), regime, None)?;
    let rho0 = table.vertex.a;
    let mut worst: f64 = 0.0;
    for (idx, w) in table.entries.iter().enumerate() {
        let [a, _, c, _] = corners_of(idx);
        let target = if a == c { rho0 } else { Complex64::new(0.0, 0.0) };
        worst = worst.max((w - target).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, SQRT_2};

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn weights_at_zero_and_quarter() {
        let r = Regime::critical(FRAC_PI_3).unwrap();
        let w = vertex_weights(re(0.0), &r).unwrap();
        assert!((w.a - 1.0).norm() < 1e-15 && w.b.norm() < 1e-15 && (w.c - 1.0).norm() < 1e-15);
        let r = Regime::critical(FRAC_PI_2).unwrap();
        let w = vertex_weights(re(FRAC_PI_4), &r).unwrap();
        assert!((w.b - 1.0).norm() < 1e-14 && (w.c - SQRT_2).norm() < 1e-14);
    }

    #[test]
    fn massive_delta_identity() {
        let r = Regime::massive(1.5f64.acosh()).unwrap();
        let w = vertex_weights(re(0.3), &r).unwrap();
        assert!((w.delta() - 1.5).norm() < 1e-12);
    }

    #[test]
    fn regime_from_delta() {
        assert_eq!(Regime::from_delta(0.5).unwrap().kind, RegimeKind::Critical);
        assert_eq!(Regime::from_delta(1.5).unwrap().kind, RegimeKind::Massive);
        assert!(Regime::from_delta(-1.5).is_err());
    }

    #[test]
    fn singular_parameter_detected() {
        let r = Regime::critical(FRAC_PI_3).unwrap();
        assert!(matches!(
            vertex_weights(re(-FRAC_PI_3), &r),
            Err(IronfaceError::SingularSpectralParameter { .. })
        ));
    }

    #[test]
    fn named_corners() {
        let r = Regime::critical(0.7).unwrap();
        let t = face_weight_table(re(0.21), &r, None).unwrap();
        assert_eq!(t.w(1, 1, 1, 1), t.vertex.a);
        assert_eq!(t.w(-1, 1, -1, 1), t.vertex.a);
        assert_eq!(t.class_counts(), [4, 4, 4, 4]);
    }

    #[test]
    fn identities_hold() {
        let r = Regime::critical(FRAC_PI_3).unwrap();
        assert!(check_yang_baxter(re(0.3), re(0.1), &r).unwrap() < 1e-12);
        assert!(check_unitarity(re(0.4), &r).unwrap().0 < 1e-12);
        let m = Regime::massive(2f64.acosh()).unwrap();
        assert!(check_unitarity(re(0.2), &m).unwrap().0 < 1e-12);
        assert!(check_initial_condition(&m).unwrap() < 1e-15);
    }
}
