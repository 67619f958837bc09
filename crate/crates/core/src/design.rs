//! Space-filling designs, input scaling transforms, and subsample-based
//! separable lengthscale pre-estimation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gp::{self, FitOptions, LengthscaleMode};

/// An N x d matrix of input points: one row per point, one column per input
/// dimension. Entries are validated to be finite at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
    column_names: Option<Vec<String>>,
}

impl DesignMatrix {
    /// Builds a design from row-major data.
    pub fn from_flat(data: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("design must have at least one row and one column"));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("design entries must be finite"));
        }
        Ok(DesignMatrix { data, rows, cols, column_names: None })
    }

    /// Builds a design from a list of equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("design must have at least one row"));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("all rows must have the same length"));
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            data.extend_from_slice(r);
        }
        Self::from_flat(data, rows.len(), cols)
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.cols {
            return Err(Error::invalid("column name count must match column count"));
        }
        self.column_names = Some(names);
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    /// New design holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if indices.iter().any(|&i| i >= self.rows) {
            return Err(Error::invalid("row index out of range"));
        }
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self::from_flat(data, indices.len(), self.cols)
    }
}

/// How a [`ScalingTransform`] was produced.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalingMode {
    /// Column ranges mapped onto the unit cube.
    IsotropicCube,
    /// Unit-cube coordinates further divided by the square roots of median
    /// lengthscales; the divisors are retained so cube coordinates stay
    /// recoverable.
    SeparableRescaled { divisors: Vec<f64> },
}

/// Affine per-column map from natural units into the space the emulator
/// works in: `z = (x - shift) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTransform {
    shift: Vec<f64>,
    scale: Vec<f64>,
    mode: ScalingMode,
}

impl ScalingTransform {
    pub fn dims(&self) -> usize {
        self.shift.len()
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn mode(&self) -> &ScalingMode {
        &self.mode
    }

    /// Identity transform (shift 0, scale 1) in `d` dimensions.
    pub fn identity(d: usize) -> Self {
        ScalingTransform {
            shift: vec![0.0; d],
            scale: vec![1.0; d],
            mode: ScalingMode::IsotropicCube,
        }
    }

    pub fn apply_row(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dims(), "dimension mismatch in scaling");
        x.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(&v, (&sh, &sc))| (v - sh) / sc)
            .collect()
    }

    pub fn invert_row(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.dims(), "dimension mismatch in scaling");
        z.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(&v, (&sh, &sc))| v * sc + sh)
            .collect()
    }

    pub fn apply(&self, x: &DesignMatrix) -> Result<DesignMatrix> {
        if x.n_cols() != self.dims() {
            return Err(Error::invalid("dimension mismatch in scaling"));
        }
        let rows: Vec<Vec<f64>> = x.rows_iter().map(|r| self.apply_row(r)).collect();
        DesignMatrix::from_rows(&rows)
    }

    pub fn invert(&self, z: &DesignMatrix) -> Result<DesignMatrix> {
        if z.n_cols() != self.dims() {
            return Err(Error::invalid("dimension mismatch in scaling"));
        }
        let rows: Vec<Vec<f64>> = z.rows_iter().map(|r| self.invert_row(r)).collect();
        DesignMatrix::from_rows(&rows)
    }

    fn divisor(&self, col: usize) -> f64 {
        match &self.mode {
            ScalingMode::IsotropicCube => 1.0,
            ScalingMode::SeparableRescaled { divisors } => divisors[col],
        }
    }

    /// Unit-cube coordinate of a natural-units value in column `col`.
    /// Under the rescaled mode the cube coordinate undoes the divisor.
    pub fn cube_from_natural(&self, col: usize, v: f64) -> f64 {
        let base = self.scale[col] / self.divisor(col);
        (v - self.shift[col]) / base
    }

    pub fn natural_from_cube(&self, col: usize, cube: f64) -> f64 {
        let base = self.scale[col] / self.divisor(col);
        self.shift[col] + cube * base
    }

    /// Working-space coordinate of a unit-cube value in column `col`.
    pub fn scaled_from_cube(&self, col: usize, cube: f64) -> f64 {
        cube / self.divisor(col)
    }
}

/// Latin hypercube sample of `n` points in `(0,1)^d`: one independent
/// stratum permutation per column, one point jittered uniformly within each
/// stratum.
pub fn lhs_sample<R: Rng>(n: usize, d: usize, rng: &mut R) -> Result<DesignMatrix> {
    if n == 0 || d == 0 {
        return Err(Error::invalid("lhs_sample requires n >= 1 and d >= 1"));
    }
    let mut data = vec![0.0; n * d];
    for j in 0..d {
        let mut strata: Vec<usize> = (0..n).collect();
        // Fisher-Yates via the rand helper keeps draws reproducible.
        for i in (1..n).rev() {
            let k = rng.random_range(0..=i);
            strata.swap(i, k);
        }
        for i in 0..n {
            // Jitter in the open interval so the point never lands on a
            // stratum boundary (the generator later relies on x > 0).
            let u = loop {
                let u: f64 = rng.random();
                if u > 0.0 {
                    break u;
                }
            };
            data[i * d + j] = (strata[i] as f64 + u) / n as f64;
        }
    }
    DesignMatrix::from_flat(data, n, d)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

fn min_pairwise_dist2(candidates: &DesignMatrix, subset: &[usize]) -> f64 {
    let mut best = f64::INFINITY;
    for (a, &i) in subset.iter().enumerate() {
        for &j in &subset[a + 1..] {
            let d = dist2(candidates.row(i), candidates.row(j));
            if d < best {
                best = d;
            }
        }
    }
    best
}

/// Picks `k` distinct rows approximately maximizing the minimum pairwise
/// distance, by stochastic exchange: random single-point swaps accepted on
/// strict improvement, with a fixed budget of `100 * k` proposals.
pub fn maximin_subset<R: Rng>(
    candidates: &DesignMatrix,
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let n = candidates.n_rows();
    if k == 0 {
        return Err(Error::invalid("maximin_subset requires k >= 1"));
    }
    if k > n {
        return Err(Error::invalid(format!("k = {k} exceeds candidate count {n}")));
    }
    if k == n {
        return Ok((0..n).collect());
    }

    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    let mut subset: Vec<usize> = perm[..k].to_vec();
    let mut outside: Vec<usize> = perm[k..].to_vec();
    let mut best = min_pairwise_dist2(candidates, &subset);

    let budget = 100 * k;
    for _ in 0..budget {
        let si = rng.random_range(0..k);
        let oi = rng.random_range(0..outside.len());
        std::mem::swap(&mut subset[si], &mut outside[oi]);
        let trial = min_pairwise_dist2(candidates, &subset);
        if trial > best {
            best = trial;
        } else {
            std::mem::swap(&mut subset[si], &mut outside[oi]);
        }
    }
    subset.sort_unstable();
    Ok(subset)
}

/// Transform mapping each column's observed range onto [0, 1]. Constant
/// columns map to 0.5 with unit scale instead of dividing by zero.
pub fn fit_unit_cube(data: &DesignMatrix) -> ScalingTransform {
    let d = data.n_cols();
    let mut shift = vec![0.0; d];
    let mut scale = vec![1.0; d];
    for j in 0..d {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..data.n_rows() {
            let v = data.get(i, j);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi > lo {
            shift[j] = lo;
            scale[j] = hi - lo;
        } else {
            shift[j] = lo - 0.5;
            scale[j] = 1.0;
        }
    }
    ScalingTransform { shift, scale, mode: ScalingMode::IsotropicCube }
}

/// Divides already-scaled coordinates by the square roots of per-dimension
/// median lengthscales (equivalently, multiplies the transform's scale).
pub fn apply_separable_rescale(
    transform: &ScalingTransform,
    medians: &[f64],
) -> Result<ScalingTransform> {
    if medians.len() != transform.dims() {
        return Err(Error::invalid("median count must match transform dimensions"));
    }
    if medians.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
        return Err(Error::invalid("median lengthscales must be positive and finite"));
    }
    let mut scale = transform.scale.clone();
    let mut divisors = vec![1.0; transform.dims()];
    if let ScalingMode::SeparableRescaled { divisors: prev } = &transform.mode {
        divisors.copy_from_slice(prev);
    }
    for j in 0..transform.dims() {
        let root = medians[j].sqrt();
        scale[j] *= root;
        divisors[j] *= root;
    }
    Ok(ScalingTransform {
        shift: transform.shift.clone(),
        scale,
        mode: ScalingMode::SeparableRescaled { divisors },
    })
}

/// Per-dimension summary of separable lengthscales estimated on random
/// subsets.
#[derive(Debug, Clone)]
pub struct SeparableScaleEstimate {
    pub medians: Vec<f64>,
    pub lower_quartiles: Vec<f64>,
    pub upper_quartiles: Vec<f64>,
    /// One fitted lengthscale vector per repetition, in repetition order.
    pub estimates: Vec<Vec<f64>>,
}

/// Linear-interpolation quantile of unsorted values (R type 7).
pub(crate) fn quantile(values: &[f64], p: f64) -> f64 {
    debug_assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        v[lo]
    } else {
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    }
}

/// Fits a separable-lengthscale GP on `reps` random subsets of size
/// `subset_size` and summarizes the per-dimension lengthscales across
/// repetitions. Repetitions run concurrently on independent seeded streams
/// and are merged in repetition order.
pub fn estimate_separable_scales<R: Rng>(
    data: &DesignMatrix,
    outputs: &[f64],
    subset_size: usize,
    reps: usize,
    rng: &mut R,
) -> Result<SeparableScaleEstimate> {
    let n = data.n_rows();
    if outputs.len() != n {
        return Err(Error::invalid("outputs length must match design rows"));
    }
    if subset_size < 10 {
        return Err(Error::invalid("subset_size below 10 makes the MLE degenerate"));
    }
    if subset_size > n {
        return Err(Error::invalid("subset_size exceeds available rows"));
    }
    if reps == 0 {
        return Err(Error::invalid("reps must be >= 1"));
    }

    let seeds: Vec<u64> = (0..reps).map(|_| rng.random()).collect();
    let fits: Vec<Result<Vec<f64>>> = seeds
        .par_iter()
        .map(|&seed| {
            let mut local = ChaCha20Rng::seed_from_u64(seed);
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                let j = local.random_range(0..=i);
                perm.swap(i, j);
            }
            let idx = &perm[..subset_size];
            let sub_x = data.select_rows(idx)?;
            let sub_y: Vec<f64> = idx.iter().map(|&i| outputs[i]).collect();
            let opts = FitOptions {
                mode: LengthscaleMode::Separable,
                fixed_nugget: 1e-6,
                ..FitOptions::default()
            };
            let model = gp::fit_hyperparameters(&sub_x, &sub_y, &opts, &mut local)?;
            Ok(model.spec().lengthscales_vec(data.n_cols()))
        })
        .collect();

    let mut estimates = Vec::with_capacity(reps);
    for fit in fits {
        estimates.push(fit?);
    }

    let d = data.n_cols();
    let mut medians = Vec::with_capacity(d);
    let mut lower = Vec::with_capacity(d);
    let mut upper = Vec::with_capacity(d);
    for j in 0..d {
        let col: Vec<f64> = estimates.iter().map(|e| e[j]).collect();
        medians.push(quantile(&col, 0.5));
        lower.push(quantile(&col, 0.25));
        upper.push(quantile(&col, 0.75));
    }
    Ok(SeparableScaleEstimate { medians, lower_quartiles: lower, upper_quartiles: upper, estimates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    #[test]
    fn lhs_single_point_lies_in_open_cube() {
        let x = lhs_sample(1, 3, &mut rng(1)).unwrap();
        assert_eq!(x.n_rows(), 1);
        for j in 0..3 {
            assert!(x.get(0, j) > 0.0 && x.get(0, j) < 1.0);
        }
    }

    #[test]
    fn lhs_fills_every_stratum_once() {
        let n = 50;
        let x = lhs_sample(n, 2, &mut rng(7)).unwrap();
        for j in 0..2 {
            let mut counts = vec![0usize; n];
            for i in 0..n {
                let bin = (x.get(i, j) * n as f64).floor() as usize;
                counts[bin.min(n - 1)] += 1;
            }
            assert!(counts.iter().all(|&c| c == 1), "column {j} not stratified");
        }
    }

    #[test]
    fn lhs_is_deterministic_for_a_seed() {
        let a = lhs_sample(10, 1, &mut rng(42)).unwrap();
        let b = lhs_sample(10, 1, &mut rng(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lhs_rejects_degenerate_sizes() {
        assert!(lhs_sample(0, 2, &mut rng(0)).is_err());
        assert!(lhs_sample(3, 0, &mut rng(0)).is_err());
    }

    #[test]
    fn maximin_full_set_returns_all_indices() {
        let c = lhs_sample(6, 2, &mut rng(3)).unwrap();
        let idx = maximin_subset(&c, 6, &mut rng(4)).unwrap();
        assert_eq!(idx, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn maximin_on_a_line_picks_the_endpoints() {
        let c = DesignMatrix::from_rows(&[vec![0.0], vec![0.5], vec![1.0]]).unwrap();
        let idx = maximin_subset(&c, 2, &mut rng(11)).unwrap();
        assert_eq!(idx, vec![0, 2]);
    }

    #[test]
    fn maximin_rejects_oversized_k() {
        let c = lhs_sample(5, 2, &mut rng(0)).unwrap();
        assert!(maximin_subset(&c, 6, &mut rng(0)).is_err());
    }

    #[test]
    fn maximin_beats_random_subsets_on_median() {
        let mut better = 0;
        let trials = 50;
        for s in 0..trials {
            let mut r = rng(1000 + s);
            let c = lhs_sample(200, 2, &mut r).unwrap();
            let chosen = maximin_subset(&c, 20, &mut r).unwrap();
            let d_maximin = min_pairwise_dist2(&c, &chosen);
            let mut perm: Vec<usize> = (0..200).collect();
            for i in (1..200usize).rev() {
                let j = r.random_range(0..=i);
                perm.swap(i, j);
            }
            let d_random = min_pairwise_dist2(&c, &perm[..20]);
            if d_maximin >= d_random {
                better += 1;
            }
        }
        assert!(better * 2 >= trials, "maximin won only {better}/{trials} seeds");
    }

    #[test]
    fn unit_cube_maps_ranges_to_zero_one() {
        let c = DesignMatrix::from_rows(&[vec![18.0], vec![20.0], vec![22.0]]).unwrap();
        let t = fit_unit_cube(&c);
        let z = t.apply(&c).unwrap();
        assert!((z.get(0, 0) - 0.0).abs() < 1e-15);
        assert!((z.get(2, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unit_cube_is_identity_on_unit_data() {
        let c = DesignMatrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let t = fit_unit_cube(&c);
        assert_eq!(t.shift(), &[0.0, 0.0]);
        assert_eq!(t.scale(), &[1.0, 1.0]);
    }

    #[test]
    fn unit_cube_sends_constant_columns_to_half() {
        let c = DesignMatrix::from_rows(&[vec![7.0, 1.0], vec![7.0, 2.0]]).unwrap();
        let t = fit_unit_cube(&c);
        let z = t.apply(&c).unwrap();
        assert!((z.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((z.get(1, 0) - 0.5).abs() < 1e-15);
        assert_eq!(t.scale()[0], 1.0);
    }

    #[test]
    fn rescale_with_unit_medians_changes_nothing() {
        let c = DesignMatrix::from_rows(&[vec![0.0, 0.0], vec![2.0, 4.0]]).unwrap();
        let t = fit_unit_cube(&c);
        let r = apply_separable_rescale(&t, &[1.0, 1.0]).unwrap();
        assert_eq!(t.scale(), r.scale());
        assert_eq!(t.shift(), r.shift());
    }

    #[test]
    fn rescale_divides_coordinates_by_root_medians() {
        let t = ScalingTransform::identity(2);
        let r = apply_separable_rescale(&t, &[0.64, 2.11]).unwrap();
        let z = r.apply_row(&[1.0, 1.0]);
        assert!((z[0] - 1.0 / 0.8).abs() < 1e-12);
        assert!((z[1] - 1.0 / 2.11f64.sqrt()).abs() < 1e-12);
        assert!((2.11f64.sqrt() - 1.4526).abs() < 1e-3);
        // Cube coordinates are still recoverable through the divisors.
        assert!((r.cube_from_natural(0, 1.0) - 1.0).abs() < 1e-12);
        assert!((r.scaled_from_cube(0, 1.0) - 1.25).abs() < 1e-12);
    }

    #[test]
    fn rescale_uniform_medians_shrink_distances_uniformly() {
        let theta = 4.0;
        let t = ScalingTransform::identity(3);
        let r = apply_separable_rescale(&t, &[theta; 3]).unwrap();
        let a = r.apply_row(&[1.0, 2.0, 3.0]);
        let b = r.apply_row(&[2.0, 0.0, 1.0]);
        let d_scaled = dist2(&a, &b);
        let d_nat = dist2(&[1.0, 2.0, 3.0], &[2.0, 0.0, 1.0]);
        assert!((d_scaled - d_nat / theta).abs() < 1e-12);
    }

    #[test]
    fn rescale_rejects_nonpositive_medians() {
        let t = ScalingTransform::identity(1);
        assert!(apply_separable_rescale(&t, &[0.0]).is_err());
        assert!(apply_separable_rescale(&t, &[-1.0]).is_err());
    }

    #[test]
    fn scale_estimation_needs_enough_points() {
        let c = lhs_sample(30, 2, &mut rng(5)).unwrap();
        let y: Vec<f64> = (0..30).map(|i| i as f64).collect();
        assert!(estimate_separable_scales(&c, &y, 5, 2, &mut rng(6)).is_err());
    }

    #[test]
    fn scale_estimation_single_rep_is_the_median() {
        let mut r = rng(9);
        let c = lhs_sample(40, 2, &mut r).unwrap();
        let y: Vec<f64> = c.rows_iter().map(|p| (4.0 * p[0]).sin() + p[1]).collect();
        let est = estimate_separable_scales(&c, &y, 25, 1, &mut rng(10)).unwrap();
        assert_eq!(est.estimates.len(), 1);
        assert_eq!(est.medians, est.estimates[0]);
    }

    #[test]
    fn scale_estimation_is_reproducible() {
        let mut r = rng(13);
        let c = lhs_sample(60, 2, &mut r).unwrap();
        let y: Vec<f64> = c.rows_iter().map(|p| (3.0 * p[0]).cos() * p[1]).collect();
        let a = estimate_separable_scales(&c, &y, 20, 3, &mut rng(14)).unwrap();
        let b = estimate_separable_scales(&c, &y, 20, 3, &mut rng(14)).unwrap();
        assert_eq!(a.estimates, b.estimates);
        assert_eq!(a.medians, b.medians);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn lhs_stratification_holds_for_any_seed(n in 1usize..40, d in 1usize..5, seed: u64) {
            let x = lhs_sample(n, d, &mut rng(seed)).unwrap();
            for j in 0..d {
                let mut counts = vec![0usize; n];
                for i in 0..n {
                    let bin = ((x.get(i, j) * n as f64).floor() as usize).min(n - 1);
                    counts[bin] += 1;
                }
                prop_assert!(counts.iter().all(|&c| c == 1));
            }
        }

        #[test]
        fn scaling_round_trip_is_tight(
            vals in proptest::collection::vec(-1e6f64..1e6, 2..40),
            medians in proptest::collection::vec(0.05f64..20.0, 1..4),
        ) {
            let d = medians.len();
            let n = vals.len() / d;
            prop_assume!(n >= 2);
            let data = DesignMatrix::from_flat(vals[..n * d].to_vec(), n, d).unwrap();
            let t = fit_unit_cube(&data);
            let t = apply_separable_rescale(&t, &medians).unwrap();
            let z = t.apply(&data).unwrap();
            let back = t.invert(&z).unwrap();
            for i in 0..n {
                for j in 0..d {
                    let orig = data.get(i, j);
                    let got = back.get(i, j);
                    let tol = 1e-12 * orig.abs().max(1.0);
                    prop_assert!((orig - got).abs() <= tol);
                }
            }
        }
    }
}
