use crate::quant::{QuantError, QuantizerSpec};
use crate::scalar::Real;

pub const LLOYD_TOLERANCE: f64 = 1e-6;
pub const LLOYD_MAX_ROUNDS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct LloydReport {
    pub rounds: usize,
    /// Empty cells that were re-seeded by splitting a populated cell.
    pub repairs: usize,
    /// Mean squared error of `|x|` before the first round and after each round.
    pub distortion: Vec<f64>,
}

/// Sorted magnitudes with prefix sums, so each cell's count, sum and sum of
/// squares is two lookups away.
struct Sorted {
    x: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl Sorted {
    fn new(samples: impl Iterator<Item = f64>) -> Self {
        let mut x: Vec<f64> = samples.map(f64::abs).collect();
        x.sort_by(f64::total_cmp);
        let mut s1 = Vec::with_capacity(x.len() + 1);
        let mut s2 = Vec::with_capacity(x.len() + 1);
        let (mut a, mut b) = (0.0, 0.0);
        s1.push(0.0);
        s2.push(0.0);
        for &v in &x {
            a += v;
            b += v * v;
            s1.push(a);
            s2.push(b);
        }
        Sorted { x, s1, s2 }
    }

    /// Sample index ranges of each cell under midpoint thresholds.
    fn cells(&self, levels: &[f64]) -> Vec<(usize, usize)> {
        let mut bounds = vec![0];
        for w in levels.windows(2) {
            let t = 0.5 * (w[0] + w[1]);
            bounds.push(self.x.partition_point(|&v| v < t));
        }
        bounds.push(self.x.len());
        bounds.windows(2).map(|b| (b[0], b[1])).collect()
    }

    fn sse(&self, (a, b): (usize, usize), q: f64) -> f64 {
        let n = (b - a) as f64;
        (self.s2[b] - self.s2[a]) - 2.0 * q * (self.s1[b] - self.s1[a]) + q * q * n
    }

    fn distortion(&self, levels: &[f64]) -> f64 {
        let cells = self.cells(levels);
        let total: f64 = cells.iter().zip(levels).map(|(&c, &q)| self.sse(c, q)).sum();
        total.max(0.0) / self.x.len() as f64
    }
}

/// Fits a `bits`-bit symmetric quantizer to `|samples|` with `q_0 = 0` pinned.
///
/// Starts from evenly spaced levels over `[0, max|x|]` and alternates
/// nearest-level assignment with centroid updates until no level moves by
/// more than [`LLOYD_TOLERANCE`] or [`LLOYD_MAX_ROUNDS`] rounds have run.
pub fn lloyd_max_fit<T: Real>(samples: &[T], bits: u32) -> Result<(QuantizerSpec<T>, LloydReport), QuantError> {
    if !(2..=16).contains(&bits) {
        return Err(QuantError::BitWidth(bits));
    }
    let m = 1usize << (bits - 1);
    if samples.len() < 2 * m {
        return Err(QuantError::Samples {
            needed: 2 * m,
            found: samples.len(),
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(QuantError::Levels("non-finite calibration sample".into()));
    }
    let data = Sorted::new(samples.iter().map(|x| x.as_f64()));
    let top = *data.x.last().expect("non-empty");
    let top = if top > 0.0 { top } else { 1.0 };
    let mut levels: Vec<f64> = (0..m).map(|i| top * i as f64 / (m - 1) as f64).collect();
    let mut report = LloydReport {
        rounds: 0,
        repairs: 0,
        distortion: vec![data.distortion(&levels)],
    };
    while report.rounds < LLOYD_MAX_ROUNDS {
        report.rounds += 1;
        let cells = data.cells(&levels);
        let mut next = levels.clone();
        for i in 1..m {
            let (a, b) = cells[i];
            if b > a {
                next[i] = (data.s1[b] - data.s1[a]) / (b - a) as f64;
            }
        }
        for i in 1..m {
            let (a, b) = cells[i];
            if b > a {
                continue;
            }
            // Re-seed an empty cell inside the cell with the largest error.
            let worst = (0..m)
                .filter(|&j| {
                    let (a, b) = cells[j];
                    b > a && data.x[b - 1] > data.x[a]
                })
                .max_by(|&j, &k| data.sse(cells[j], next[j]).total_cmp(&data.sse(cells[k], next[k])));
            if let Some(j) = worst {
                let (a, b) = cells[j];
                let upper = data.x[a..b].partition_point(|&v| v <= next[j]) + a;
                next[i] = if upper < b {
                    (data.s1[b] - data.s1[upper]) / (b - upper) as f64
                } else {
                    data.x[b - 1]
                };
                report.repairs += 1;
            }
        }
        next[1..].sort_by(f64::total_cmp);
        for i in 1..m {
            if next[i] <= next[i - 1] {
                next[i] = next[i - 1] + crate::quant::MIN_LEVEL_GAP;
            }
        }
        let moved = levels.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        levels = next;
        report.distortion.push(data.distortion(&levels));
        if moved < LLOYD_TOLERANCE {
            break;
        }
    }
    let spec = QuantizerSpec::new(bits, levels.into_iter().map(T::lit).collect())?;
    Ok((spec, report))
}

/// Mean squared quantization error of `spec` on `samples`.
pub fn distortion<T: Real>(spec: &QuantizerSpec<T>, samples: &[T]) -> f64 {
    let total: f64 = samples
        .iter()
        .map(|&x| {
            let e = (x - spec.quantize(x)).as_f64();
            e * e
        })
        .sum();
    total / samples.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples() {
        let (s, _) = lloyd_max_fit(&[2.5f64; 10], 2).unwrap();
        assert_eq!(s.levels(), &[0.0, 2.5]);
    }

    #[test]
    fn symmetric_unit_samples() {
        let xs: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let (s, _) = lloyd_max_fit(&xs, 2).unwrap();
        assert_eq!(s.levels()[1], 1.0);
    }

    #[test]
    fn distortion_does_not_increase() {
        let xs: Vec<f64> = (0..2000).map(|i| ((i * 7919) % 1000) as f64 / 100.0 - 3.0).map(|x| x * x.abs()).collect();
        let (s, r) = lloyd_max_fit(&xs, 3).unwrap();
        for w in r.distortion.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{:?}", r.distortion);
        }
        let d = distortion(&s, &xs);
        assert!((d - r.distortion.last().unwrap()).abs() < 1e-9);
    }

    #[test]
    fn empty_cell_is_repaired() {
        // two clusters far apart leave the middle uniform levels empty
        let mut xs = vec![0.1f64; 50];
        xs.extend(std::iter::repeat_n(10.0, 25));
        xs.extend(std::iter::repeat_n(10.5, 25));
        let (s, r) = lloyd_max_fit(&xs, 3).unwrap();
        assert!(r.repairs > 0);
        assert!(s.levels().contains(&10.0) && s.levels().contains(&10.5));
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            lloyd_max_fit(&[1.0f64, 2.0], 2),
            Err(QuantError::Samples { needed: 4, found: 2 })
        ));
    }
}
