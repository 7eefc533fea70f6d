//! Metric and arc primitives on the circle and the torus.
//!
//! Angles are plain `f64` radians. Every comparison first reduces an angle to
//! its canonical representative in `[0, 2π)` via [`normalize`].

use std::f64::consts::{PI, TAU};
use std::fmt;

use crate::maps::CircleMap;

/// Reduces an angle to `[0, 2π)`.
pub fn normalize(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Euclidean distance `|e^{ix} - e^{iy}| = 2|sin((x - y)/2)|`.
pub fn chord_distance(x: f64, y: f64) -> f64 {
    (2.0 * ((x - y) / 2.0).sin()).abs()
}

/// Arc-length distance on the unit circle, in `[0, π]`.
pub fn geodesic_distance(x: f64, y: f64) -> f64 {
    let d = normalize(x - y);
    d.min(TAU - d)
}

/// Signed representative of `x` in `(-π, π]`.
pub fn wrap_signed(x: f64) -> f64 {
    let r = normalize(x);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// An arc of the circle between `lo` and `hi` (counterclockwise), with
/// explicit closure flags on each endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    lo: f64,
    hi: f64,
    lo_closed: bool,
    hi_closed: bool,
}

impl Arc {
    /// General constructor. Requires `0 < hi - lo <= 2π`.
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> crate::Result<Self> {
        let span = hi - lo;
        if !(span > 0.0 && span <= TAU) || !lo.is_finite() || !hi.is_finite() {
            return Err(crate::error::invalid(
                "arc",
                format!("need 0 < hi - lo <= 2π, got lo = {lo}, hi = {hi}"),
            ));
        }
        Ok(Arc {
            lo,
            hi,
            lo_closed,
            hi_closed,
        })
    }

    /// The default half-open arc `(lo, hi]`.
    pub fn half_open(lo: f64, hi: f64) -> crate::Result<Self> {
        Self::new(lo, hi, false, true)
    }

    pub fn open(lo: f64, hi: f64) -> crate::Result<Self> {
        Self::new(lo, hi, false, false)
    }

    pub fn closed(lo: f64, hi: f64) -> crate::Result<Self> {
        Self::new(lo, hi, true, true)
    }

    /// Closed arc of half-width `radius` around `center`.
    pub fn centered(center: f64, radius: f64) -> crate::Result<Self> {
        Self::closed(center - radius, center + radius)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        let span = self.hi - self.lo;
        let t = normalize(x - self.lo);
        if t == 0.0 {
            // `lo` and `hi` coincide on the circle when the span is a full turn
            return self.lo_closed || (span >= TAU && self.hi_closed);
        }
        if t < span {
            true
        } else if t == span {
            self.hi_closed
        } else {
            false
        }
    }
}

impl fmt::Display for Arc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        write!(f, "A{l}{:.6},{:.6}{r}", self.lo, self.hi)
    }
}

/// A subset of the circle: finite unions of arcs, preimages of arcs under a
/// circle map, and their complements.
#[derive(Debug, Clone)]
pub enum CircleSet {
    Full,
    Empty,
    Arcs(Vec<Arc>),
    /// `{x : map(x) ∈ target}`.
    Preimage {
        map: CircleMap,
        target: Arc,
    },
    Complement(Box<CircleSet>),
    Union(Vec<CircleSet>),
}

impl CircleSet {
    pub fn preimage(map: &CircleMap, target: Arc) -> Self {
        CircleSet::Preimage {
            map: map.clone(),
            target,
        }
    }

    pub fn complement(self) -> Self {
        CircleSet::Complement(Box::new(self))
    }

    pub fn union(self, other: CircleSet) -> Self {
        CircleSet::Union(vec![self, other])
    }

    pub fn contains(&self, x: f64) -> bool {
        match self {
            CircleSet::Full => true,
            CircleSet::Empty => false,
            CircleSet::Arcs(arcs) => arcs.iter().any(|a| a.contains(x)),
            CircleSet::Preimage { map, target } => target.contains(map.phase_at(x)),
            CircleSet::Complement(inner) => !inner.contains(x),
            CircleSet::Union(parts) => parts.iter().any(|s| s.contains(x)),
        }
    }

    /// Membership evaluated at each node.
    pub fn mask(&self, nodes: &[f64]) -> Vec<bool> {
        nodes.iter().map(|&x| self.contains(x)).collect()
    }
}

impl fmt::Display for CircleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CircleSet::Full => write!(f, "S1"),
            CircleSet::Empty => write!(f, "{{}}"),
            CircleSet::Arcs(arcs) => {
                let parts: Vec<String> = arcs.iter().map(|a| a.to_string()).collect();
                write!(f, "{}", parts.join("+"))
            }
            CircleSet::Preimage { target, .. } => write!(f, "pre({target})"),
            CircleSet::Complement(inner) => write!(f, "not({inner})"),
            CircleSet::Union(parts) => {
                let parts: Vec<String> = parts.iter().map(|a| a.to_string()).collect();
                write!(f, "union({})", parts.join(","))
            }
        }
    }
}

/// A subset of the torus `S¹ × S¹` built from products of circle sets.
#[derive(Debug, Clone)]
pub enum TorusRegion {
    Full,
    Product(CircleSet, CircleSet),
    Union(Vec<TorusRegion>),
    /// Union whose parts are pairwise disjoint; membership is the same as
    /// [`TorusRegion::Union`].
    DisjointUnion(Vec<TorusRegion>),
    Complement(Box<TorusRegion>),
    Labeled(String, Box<TorusRegion>),
}

impl TorusRegion {
    pub fn product(x: CircleSet, y: CircleSet) -> Self {
        TorusRegion::Product(x, y)
    }

    pub fn complement(self) -> Self {
        TorusRegion::Complement(Box::new(self))
    }

    pub fn disjoint_union(parts: Vec<TorusRegion>) -> Self {
        TorusRegion::DisjointUnion(parts)
    }

    pub fn labeled(self, label: impl Into<String>) -> Self {
        TorusRegion::Labeled(label.into(), Box::new(self))
    }

    pub fn is_full(&self) -> bool {
        match self {
            TorusRegion::Full => true,
            TorusRegion::Labeled(_, inner) => inner.is_full(),
            _ => false,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            TorusRegion::Full => true,
            TorusRegion::Product(a, b) => a.contains(x) && b.contains(y),
            TorusRegion::Union(parts) | TorusRegion::DisjointUnion(parts) => parts.iter().any(|r| r.contains(x, y)),
            TorusRegion::Complement(inner) => !inner.contains(x, y),
            TorusRegion::Labeled(_, inner) => inner.contains(x, y),
        }
    }

    /// Precomputes per-axis membership masks for tensor-grid evaluation.
    pub fn compile(&self, x_nodes: &[f64], y_nodes: &[f64]) -> CompiledRegion {
        match self {
            TorusRegion::Full => CompiledRegion::Full,
            TorusRegion::Product(a, b) => CompiledRegion::Product(a.mask(x_nodes), b.mask(y_nodes)),
            TorusRegion::Union(parts) | TorusRegion::DisjointUnion(parts) => {
                CompiledRegion::Union(parts.iter().map(|r| r.compile(x_nodes, y_nodes)).collect())
            }
            TorusRegion::Complement(inner) => CompiledRegion::Complement(Box::new(inner.compile(x_nodes, y_nodes))),
            TorusRegion::Labeled(_, inner) => inner.compile(x_nodes, y_nodes),
        }
    }
}

impl fmt::Display for TorusRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TorusRegion::Full => write!(f, "full"),
            TorusRegion::Product(a, b) => write!(f, "({a})x({b})"),
            TorusRegion::Union(parts) | TorusRegion::DisjointUnion(parts) => {
                let sep = if matches!(self, TorusRegion::Union(_)) {
                    " u "
                } else {
                    " du "
                };
                let parts: Vec<String> = parts.iter().map(|a| a.to_string()).collect();
                write!(f, "[{}]", parts.join(sep))
            }
            TorusRegion::Complement(inner) => write!(f, "not{inner}"),
            TorusRegion::Labeled(label, _) => write!(f, "{label}"),
        }
    }
}

/// A [`TorusRegion`] with membership masks fixed on a tensor grid.
#[derive(Debug, Clone)]
pub enum CompiledRegion {
    Full,
    Product(Vec<bool>, Vec<bool>),
    Union(Vec<CompiledRegion>),
    Complement(Box<CompiledRegion>),
}

impl CompiledRegion {
    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        match self {
            CompiledRegion::Full => true,
            CompiledRegion::Product(a, b) => a[i] && b[j],
            CompiledRegion::Union(parts) => parts.iter().any(|r| r.contains(i, j)),
            CompiledRegion::Complement(inner) => !inner.contains(i, j),
        }
    }

    pub fn is_full(&self) -> bool {
        matches!(self, CompiledRegion::Full)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn chord_examples() {
        assert_relative_eq!(chord_distance(0.0, PI), 2.0);
        assert_eq!(chord_distance(0.0, 0.0), 0.0);
        assert_relative_eq!(chord_distance(0.0, FRAC_PI_2), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn geodesic_examples() {
        assert_relative_eq!(geodesic_distance(0.0, PI), PI);
        assert!(geodesic_distance(0.0, TAU).abs() < 1e-15);
        assert_relative_eq!(geodesic_distance(0.0, 3.0 * FRAC_PI_2), FRAC_PI_2, epsilon = 1e-15);
    }

    #[test]
    fn arc_closure_flags() {
        let a = Arc::half_open(0.0, PI).unwrap();
        assert!(a.contains(PI));
        assert!(!a.contains(0.0));
        let eps = 0.1;
        let b = Arc::half_open(PI - eps, PI + eps).unwrap();
        assert!(b.contains(PI + TAU));
        assert!(!b.contains(PI - eps));
        assert!(b.contains(PI + eps));
    }

    #[test]
    fn arc_rejects_bad_spans() {
        assert!(Arc::half_open(1.0, 1.0).is_err());
        assert!(Arc::half_open(0.0, 7.0).is_err());
        assert!(Arc::half_open(0.0, TAU).is_ok());
    }

    #[test]
    fn full_turn_arc_covers_everything() {
        let a = Arc::half_open(0.3, 0.3 + TAU).unwrap();
        for k in 0..100 {
            assert!(a.contains(k as f64 * 0.37));
        }
    }

    #[test]
    fn region_complement_matches_definition() {
        let plus = CircleSet::Arcs(vec![Arc::closed(-0.2, 0.2).unwrap()]);
        let minus = CircleSet::Arcs(vec![Arc::closed(PI - 0.2, PI + 0.2).unwrap()]);
        let d = TorusRegion::Union(vec![
            TorusRegion::product(plus.clone(), plus.clone()),
            TorusRegion::product(minus.clone(), minus.clone()),
        ])
        .complement();
        for i in 0..40 {
            for j in 0..40 {
                let (x, y) = (i as f64 * 0.161, j as f64 * 0.161);
                let inside = (plus.contains(x) && plus.contains(y)) || (minus.contains(x) && minus.contains(y));
                assert_eq!(d.contains(x, y), !inside);
                assert_eq!(d.contains(x + TAU, y - TAU), d.contains(x, y));
            }
        }
    }

    #[test]
    fn compiled_region_agrees_with_direct_membership() {
        let set = CircleSet::Arcs(vec![Arc::half_open(1.0, 2.5).unwrap()]);
        let region = TorusRegion::product(set.clone(), set.complement()).complement();
        let xs: Vec<f64> = (0..32).map(|i| i as f64 * TAU / 32.0).collect();
        let ys: Vec<f64> = (0..32).map(|i| (i as f64 + 0.5) * TAU / 32.0).collect();
        let compiled = region.compile(&xs, &ys);
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in ys.iter().enumerate() {
                assert_eq!(compiled.contains(i, j), region.contains(x, y));
            }
        }
    }

    proptest! {
        #[test]
        fn chord_geodesic_comparison(x in -20.0..20.0f64, y in -20.0..20.0f64) {
            let c = chord_distance(x, y);
            let g = geodesic_distance(x, y);
            prop_assert!(c <= g + 1e-12);
            prop_assert!(2.0 / PI * g <= c + 1e-12);
            prop_assert!(c <= 2.0 + 1e-15);
            prop_assert!((chord_distance(y, x) - c).abs() < 1e-15);
        }

        #[test]
        fn arc_membership_is_periodic(lo in -7.0..7.0f64, span in 0.01..6.2f64, x in -7.0..7.0f64, k in -3i32..3) {
            let a = Arc::half_open(lo, lo + span).unwrap();
            let shifted = x + k as f64 * TAU;
            // skip points numerically on an endpoint, where rounding decides
            let t = normalize(x - lo);
            prop_assume!(t > 1e-9 && (t - span).abs() > 1e-9);
            prop_assert_eq!(a.contains(x), a.contains(shifted));
        }
    }
}
