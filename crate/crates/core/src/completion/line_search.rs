use crate::error::Result;
use crate::grassmann::{TripleFrame, TripleTangent};

use super::objective::{Evaluation, Objective};
use super::GogConfig;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Accepted step and everything computed at the new point.
#[derive(Clone, Debug)]
pub struct Step {
    pub t: f64,
    pub frames: TripleFrame,
    pub eval: Evaluation,
    pub value: f64,
    pub probes: usize,
}

struct Probe {
    t: f64,
    frames: TripleFrame,
    eval: Evaluation,
    value: f64,
}

struct Search<'a> {
    objective: &'a Objective<'a>,
    frames: &'a TripleFrame,
    dirs: &'a TripleTangent,
    anchor: &'a TripleFrame,
    gamma: f64,
    probes: usize,
    max_probes: usize,
    best: Option<Probe>,
}

impl Search<'_> {
    fn exhausted(&self) -> bool {
        self.probes >= self.max_probes
    }

    /// `F̃` at step `t`, or `None` outside the trust ball.
    fn probe(&mut self, t: f64) -> Result<Option<f64>> {
        self.probes += 1;
        let frames = self.frames.geodesic(self.dirs, t)?;
        if frames.distance(self.anchor)? > self.gamma {
            return Ok(None);
        }
        let eval = self.objective.evaluate(&frames)?;
        let value = eval.total();
        if self.best.as_ref().is_none_or(|b| value < b.value) {
            self.best = Some(Probe {
                t,
                frames,
                eval,
                value,
            });
        }
        Ok(Some(value))
    }

    fn value_or_inf(&mut self, t: f64) -> Result<f64> {
        Ok(self.probe(t)?.unwrap_or(f64::INFINITY))
    }

    fn golden(&mut self, mut lo: f64, mut hi: f64, tol: f64) -> Result<()> {
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let mut f1 = self.value_or_inf(x1)?;
        let mut f2 = self.value_or_inf(x2)?;
        while hi - lo > tol * 0.5 * (hi + lo) && !self.exhausted() {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - INV_PHI * (hi - lo);
                f1 = self.value_or_inf(x1)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + INV_PHI * (hi - lo);
                f2 = self.value_or_inf(x2)?;
            }
        }
        Ok(())
    }
}

/// Step along the geodesics `t ↦ H(frames, dirs, t)` that (approximately)
/// minimizes `F̃` subject to staying within `γ` of `anchor`.
///
/// Starting from a move of `initial_fraction · min(γ, diameter)`, the step
/// is halved until it decreases `F̃` inside the ball, then grown
/// geometrically until `F̃` rises or the ball boundary is met (located by
/// bisection), and the resulting bracket is refined by golden-section search. The best probe is
/// returned; `t = 0` (with the input point) when nothing beats `value0`.
pub fn line_search(
    objective: &Objective<'_>,
    frames: &TripleFrame,
    eval0: &Evaluation,
    dirs: &TripleTangent,
    config: &GogConfig,
    anchor: &TripleFrame,
) -> Result<Step> {
    let value0 = eval0.total();
    let stay = |probes| Step {
        t: 0.0,
        frames: frames.clone(),
        eval: eval0.clone(),
        value: value0,
        probes,
    };
    let dnorm = dirs.norm();
    if dnorm == 0.0 || !dnorm.is_finite() {
        return Ok(stay(0));
    }
    let ls = config.line_search;
    let mut search = Search {
        objective,
        frames,
        dirs,
        anchor,
        gamma: config.gamma,
        probes: 0,
        max_probes: ls.max_probes,
        best: None,
    };

    // Shrink until an admissible decrease appears.
    let reach = config.gamma.min(anchor.diameter()).max(f64::MIN_POSITIVE);
    let mut t = ls.initial_fraction * reach / dnorm;
    let first = loop {
        if search.exhausted() || t * dnorm < 1e-15 {
            return Ok(stay(search.probes));
        }
        match search.probe(t)? {
            Some(v) if v < value0 => break v,
            _ => t *= 0.5,
        }
    };

    // Expand: (a, fa) < (b, fb) with fb < fa, until f rises or the ball stops us.
    let (mut a, mut b, mut fb) = (0.0, t, first);
    loop {
        if search.exhausted() {
            break;
        }
        let next = b * ls.growth;
        match search.probe(next)? {
            Some(v) if v < fb => {
                a = b;
                b = next;
                fb = v;
            }
            Some(_) => {
                search.golden(a, next, ls.golden_tol)?;
                break;
            }
            None => {
                // Largest admissible step in (b, next) by bisection.
                let (mut lo, mut hi) = (b, next);
                let mut f_lo = fb;
                while hi - lo > ls.golden_tol * lo && !search.exhausted() {
                    let mid = 0.5 * (lo + hi);
                    match search.probe(mid)? {
                        Some(v) => {
                            lo = mid;
                            f_lo = v;
                        }
                        None => hi = mid,
                    }
                }
                let left = if f_lo < fb { b } else { a };
                if lo > left && !search.exhausted() {
                    search.golden(left, lo, ls.golden_tol)?;
                }
                break;
            }
        }
    }

    let probes = search.probes;
    match search.best {
        Some(p) if p.value < value0 => Ok(Step {
            t: p.t,
            frames: p.frames,
            eval: p.eval,
            value: p.value,
            probes,
        }),
        _ => Ok(stay(probes)),
    }
}
