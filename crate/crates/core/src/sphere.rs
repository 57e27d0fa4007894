//! Fixed-radius spherical optimization for scale-invariant objectives.
//!
//! When the loss satisfies `L(c * theta) = L(theta)` for all `c > 0`, the
//! gradient is orthogonal to the parameters and shrinks as `1/c` along the
//! ray, so weight decay only changes the parameter length and, through it,
//! the gradient magnitude. Renormalizing onto a sphere of radius `R` after
//! every update removes that length drift.
//!
//! The sphere learning rate (SLR) makes the constrained run trace the same
//! directions as an unconstrained run with rate `eta'` and weight decay
//! `gamma`: if the virtual unconstrained iterate has norm `rho = alpha * R`,
//! the equivalent rate on the sphere is `eta = eta' / alpha^2`, and `rho`
//! advances by the norm of the virtual update,
//! `rho'^2 = ((1 - eta' * gamma) * rho)^2 + (eta' * |g| / alpha)^2`,
//! using the measured on-sphere gradient norm `|g|`.

use crate::error::{Error, Result};
use crate::optim::{AdaRem, AdaRemConfig, AdaRemState, Optimizer};
use crate::params::{GradVector, ParamVector};
use crate::project::FeasibleSet;

/// Relative norm slack accepted on entry to a spherical step.
const ON_SPHERE_TOLERANCE: f64 = 1e-6;

/// Rescales `theta` onto the sphere of radius `radius`.
pub fn project_to_sphere(theta: &ParamVector, radius: f64) -> Result<ParamVector> {
    if !(radius > 0.0) {
        return Err(Error::Domain(format!(
            "sphere radius must be positive, got {radius}"
        )));
    }
    let norm = theta.norm();
    if norm == 0.0 {
        return Err(Error::Domain("cannot project zero vector onto sphere".into()));
    }
    theta.with_values(theta.values().iter().map(|v| v * radius / norm).collect())
}

/// Radius and virtual-trajectory bookkeeping for the sphere rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereState {
    radius: f64,
    virtual_norm: f64,
}

impl SphereState {
    /// `initial_norm` is the norm of the unconstrained starting point, i.e.
    /// the norm of `theta_0` before its projection onto the sphere.
    pub fn new(radius: f64, initial_norm: f64) -> Result<Self> {
        if !(radius > 0.0) || !(initial_norm > 0.0) {
            return Err(Error::Config(format!(
                "sphere radius and initial norm must be positive, got R={radius}, rho={initial_norm}"
            )));
        }
        Ok(Self {
            radius,
            virtual_norm: initial_norm,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn virtual_norm(&self) -> f64 {
        self.virtual_norm
    }

    pub fn alpha(&self) -> f64 {
        self.virtual_norm / self.radius
    }

    /// Returns the equivalent rate on the sphere for Euclidean rate
    /// `eta_prime`, then advances the virtual trajectory using the measured
    /// on-sphere gradient norm.
    pub fn slr_update(
        &mut self,
        eta_prime: f64,
        gamma: f64,
        grad_norm_on_sphere: f64,
    ) -> Result<f64> {
        debug_assert!(eta_prime > 0.0);
        let alpha = self.alpha();
        if alpha < 1e-12 {
            return Err(Error::Numeric {
                step: 0,
                msg: format!("virtual trajectory collapsed: alpha = {alpha}"),
            });
        }
        let eta = eta_prime / (alpha * alpha);
        let radial = (1.0 - eta_prime * gamma) * self.virtual_norm;
        let tangential = eta_prime * grad_norm_on_sphere / alpha;
        self.virtual_norm = (radial * radial + tangential * tangential).sqrt();
        Ok(eta)
    }
}

/// One step of projected SGD on the sphere driven by the SLR rate.
///
/// The decay factor uses the Euclidean rate: it mirrors the virtual
/// trajectory's shrink, whose radial part the renormalization erases but
/// whose effect on the update direction must match the unconstrained run.
pub fn spherical_sgd_slr_step(
    theta_hat: &ParamVector,
    grad: &GradVector,
    state: &mut SphereState,
    eta_prime: f64,
    gamma: f64,
) -> Result<ParamVector> {
    if grad.len() != theta_hat.len() {
        return Err(Error::Dimension {
            expected: theta_hat.len(),
            got: grad.len(),
        });
    }
    let eta = state.slr_update(eta_prime, gamma, grad.norm())?;
    let shrink = 1.0 - eta_prime * gamma;
    let moved: Vec<f64> = theta_hat
        .values()
        .iter()
        .zip(grad.values())
        .map(|(&th, &g)| shrink * th - eta * g)
        .collect();
    project_to_sphere(&theta_hat.with_values(moved)?, state.radius()).map_err(|_| {
        Error::Numeric {
            step: 0,
            msg: "update collapsed to zero vector before renormalization".into(),
        }
    })
}

/// The adaptive method constrained to a sphere: the usual per-coordinate
/// update followed by feasible-set projection and renormalization, with the
/// momentum built from on-sphere gradients.
#[derive(Debug, Clone)]
pub struct AdaRemSphere {
    inner: AdaRem,
    sphere: SphereState,
    use_slr: bool,
}

impl AdaRemSphere {
    /// `initial_norm` seeds the virtual trajectory; pass the norm of the
    /// unprojected starting point (or the radius to start at `alpha = 1`).
    pub fn new(cfg: AdaRemConfig, dim: usize, radius: f64, initial_norm: f64) -> Result<Self> {
        Ok(Self {
            inner: AdaRem::new(cfg, dim)?,
            sphere: SphereState::new(radius, initial_norm)?,
            use_slr: false,
        })
    }

    /// Converts the per-step base rate through the sphere-rate schedule,
    /// treating it as the Euclidean-side rate.
    pub fn with_slr(mut self) -> Self {
        self.use_slr = true;
        self
    }

    pub fn sphere(&self) -> &SphereState {
        &self.sphere
    }

    pub fn state(&self) -> &AdaRemState {
        self.inner.state()
    }

    pub fn adarem_s_step(
        &mut self,
        theta_hat: &ParamVector,
        grad: &GradVector,
        base_lr: f64,
        feasible: &FeasibleSet,
    ) -> Result<ParamVector> {
        let radius = self.sphere.radius();
        let norm = theta_hat.norm();
        if (norm - radius).abs() / radius > ON_SPHERE_TOLERANCE {
            return Err(Error::Precondition(format!(
                "spherical step requires on-sphere input: |theta| = {norm}, R = {radius}"
            )));
        }
        let eta_hat = if self.use_slr {
            self.sphere.slr_update(base_lr, self.inner.config().weight_decay, grad.norm())?
        } else {
            base_lr
        };
        let updated = self.inner.adarem_step(theta_hat, grad, eta_hat, feasible)?;
        project_to_sphere(&updated, radius).map_err(|_| Error::Numeric {
            step: self.inner.state().step_count(),
            msg: "update collapsed to zero vector before renormalization".into(),
        })
    }
}

impl Optimizer for AdaRemSphere {
    fn step(
        &mut self,
        theta: &ParamVector,
        grad: &GradVector,
        base_lr: f64,
        feasible: &FeasibleSet,
    ) -> Result<ParamVector> {
        self.adarem_s_step(theta, grad, base_lr, feasible)
    }

    fn last_rates(&self) -> &[f64] {
        self.inner.last_rates()
    }

    fn advance_lambda(&mut self, epoch_boundary: bool) {
        self.inner.advance_lambda(epoch_boundary)
    }
}

/// Residuals of the two scale-invariance properties at a point.
#[derive(Debug, Clone, Copy)]
pub struct InvarianceReport {
    /// `|<grad, theta>| / (|grad| * |theta|)`; zero for a scale-invariant loss.
    pub orthogonality_residual: f64,
    /// `|grad(theta) - c * grad(c * theta)| / |grad(theta)|`; zero when the
    /// gradient shrinks as `1/c` along the ray.
    pub scaling_residual: f64,
}

/// Evaluates both scale-invariance residuals using the supplied gradient
/// oracle.
pub fn check_scale_invariance<F>(
    gradient: F,
    theta: &ParamVector,
    c: f64,
) -> Result<InvarianceReport>
where
    F: Fn(&ParamVector) -> Result<GradVector>,
{
    if !(c > 0.0) {
        return Err(Error::Domain(format!("scale factor must be positive, got {c}")));
    }
    let theta_norm = theta.norm();
    if theta_norm == 0.0 {
        return Err(Error::Domain("scale invariance undefined at the origin".into()));
    }
    let g = gradient(theta)?;
    let g_norm = g.norm();
    let inner: f64 = g
        .values()
        .iter()
        .zip(theta.values())
        .map(|(a, b)| a * b)
        .sum();
    let orthogonality_residual = if g_norm == 0.0 {
        0.0
    } else {
        inner.abs() / (g_norm * theta_norm)
    };

    let scaled = theta.with_values(theta.values().iter().map(|v| c * v).collect())?;
    let g_scaled = gradient(&scaled)?;
    let diff_norm = g
        .values()
        .iter()
        .zip(g_scaled.values())
        .map(|(a, b)| {
            let d = a - c * b;
            d * d
        })
        .sum::<f64>()
        .sqrt();
    let scaling_residual = if g_norm == 0.0 { diff_norm } else { diff_norm / g_norm };

    Ok(InvarianceReport {
        orthogonality_residual,
        scaling_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::{LambdaCadence, MaxScope};

    fn cfg_no_decay() -> AdaRemConfig {
        AdaRemConfig {
            base_lr: 0.4,
            beta: 0.999,
            lambda: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
            lambda_cadence: LambdaCadence::PerEpoch,
            max_scope: MaxScope::Global,
        }
    }

    #[test]
    fn sphere_projection_examples() {
        let v = ParamVector::single_group(vec![3.0, 4.0]).unwrap();
        assert_eq!(project_to_sphere(&v, 1.0).unwrap().values(), &[0.6, 0.8]);

        // idempotent on the sphere up to one rounding of the recomputed norm
        let u = ParamVector::single_group(vec![0.6, 0.8]).unwrap();
        let again = project_to_sphere(&u, 1.0).unwrap();
        assert!((again.values()[0] - 0.6).abs() < 1e-15);
        assert!((again.values()[1] - 0.8).abs() < 1e-15);

        let axis = ParamVector::single_group(vec![2.0, 0.0, 0.0]).unwrap();
        assert_eq!(
            project_to_sphere(&axis, 10.0).unwrap().values(),
            &[10.0, 0.0, 0.0]
        );
    }

    #[test]
    fn sphere_projection_rejects_zero() {
        let z = ParamVector::single_group(vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            project_to_sphere(&z, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn spherical_step_hand_case() {
        // tangent gradient at [1, 0] with neutral momentum
        let mut opt = AdaRemSphere::new(cfg_no_decay(), 2, 1.0, 1.0).unwrap();
        let theta = ParamVector::single_group(vec![1.0, 0.0]).unwrap();
        let g = GradVector::new(vec![0.0, 0.1]);
        let next = opt
            .adarem_s_step(&theta, &g, 0.4, &FeasibleSet::Unconstrained)
            .unwrap();
        let scale = 1.0 / 1.0016f64.sqrt();
        assert!((next.values()[0] - scale).abs() < 1e-14);
        assert!((next.values()[1] - (-0.04 * scale)).abs() < 1e-14);
        assert!((next.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_keeps_point() {
        let mut opt = AdaRemSphere::new(cfg_no_decay(), 2, 1.0, 1.0).unwrap();
        let theta = ParamVector::single_group(vec![0.6, 0.8]).unwrap();
        let g = GradVector::new(vec![0.0, 0.0]);
        let next = opt
            .adarem_s_step(&theta, &g, 0.4, &FeasibleSet::Unconstrained)
            .unwrap();
        assert!((next.values()[0] - 0.6).abs() < 1e-15);
        assert!((next.values()[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn off_sphere_input_rejected() {
        let mut opt = AdaRemSphere::new(cfg_no_decay(), 2, 1.0, 1.0).unwrap();
        let theta = ParamVector::single_group(vec![2.0, 0.0]).unwrap();
        let err = opt
            .adarem_s_step(
                &theta,
                &GradVector::new(vec![0.0, 0.1]),
                0.4,
                &FeasibleSet::Unconstrained,
            )
            .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn slr_rate_examples() {
        let mut s = SphereState::new(1.0, 1.0).unwrap();
        assert_eq!(s.slr_update(0.1, 0.0, 0.0).unwrap(), 0.1);

        let mut s = SphereState::new(1.0, 2.0).unwrap();
        assert_eq!(s.slr_update(0.4, 0.0, 0.0).unwrap(), 0.1);
    }

    #[test]
    fn slr_advances_virtual_norm() {
        let mut s = SphereState::new(1.0, 1.0).unwrap();
        let eta = s.slr_update(0.1, 0.0, 1.0).unwrap();
        assert_eq!(eta, 0.1);
        assert!((s.virtual_norm() - 1.01f64.sqrt()).abs() < 1e-15);
        assert!((s.virtual_norm() - 1.0049876).abs() < 1e-7);
    }

    // Oracle: one explicit unconstrained SGD step on a scale-invariant
    // function; the virtual norm tracked by slr_update must equal the
    // measured norm of that iterate.
    #[test]
    fn slr_virtual_norm_matches_explicit_euclidean_step() {
        // L(theta) = <w, theta / |theta|>, gradient (w - <w,u>u) / |theta|
        let w = [0.5, -1.0, 0.25];
        let grad = |theta: &[f64]| -> Vec<f64> {
            let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
            let u: Vec<f64> = theta.iter().map(|v| v / norm).collect();
            let wu: f64 = w.iter().zip(&u).map(|(a, b)| a * b).sum();
            u.iter().zip(&w).map(|(ui, wi)| (wi - wu * ui) / norm).collect()
        };

        let theta = [2.0, 1.0, 2.0]; // norm 3
        let eta_prime = 0.1;

        // explicit Euclidean step
        let g = grad(&theta);
        let moved: Vec<f64> = theta.iter().zip(&g).map(|(t, gi)| t - eta_prime * gi).collect();
        let measured_norm = moved.iter().map(|v| v * v).sum::<f64>().sqrt();

        // sphere-side bookkeeping at R = 1
        let radius = 1.0;
        let mut state = SphereState::new(radius, 3.0).unwrap();
        let theta_hat: Vec<f64> = theta.iter().map(|v| v / 3.0).collect();
        let g_sphere = grad(&theta_hat);
        let g_sphere_norm = g_sphere.iter().map(|v| v * v).sum::<f64>().sqrt();
        state.slr_update(eta_prime, 0.0, g_sphere_norm).unwrap();

        assert!(
            (state.virtual_norm() - measured_norm).abs() < 1e-12,
            "virtual norm {} vs measured {}",
            state.virtual_norm(),
            measured_norm
        );
    }

    #[test]
    fn alpha_unchanged_under_zero_gradients() {
        let mut s = SphereState::new(10.0, 7.0).unwrap();
        let alpha0 = s.alpha();
        for _ in 0..50 {
            s.slr_update(0.1, 0.0, 0.0).unwrap();
        }
        assert_eq!(s.alpha(), alpha0);
    }

    #[test]
    fn alpha_collapse_is_numeric_error() {
        let mut s = SphereState::new(1.0, 1e-13).unwrap();
        assert!(matches!(
            s.slr_update(0.1, 0.0, 1.0),
            Err(Error::Numeric { .. })
        ));
    }

    #[test]
    fn invariance_residual_on_quadratic() {
        // L = |theta|^2 is not scale invariant: gradient 2*theta
        let grad = |theta: &ParamVector| -> Result<GradVector> {
            Ok(GradVector::new(
                theta.values().iter().map(|v| 2.0 * v).collect(),
            ))
        };
        let theta = ParamVector::single_group(vec![1.0, 0.0]).unwrap();
        let report = check_scale_invariance(grad, &theta, 2.0).unwrap();
        assert!((report.orthogonality_residual - 1.0).abs() < 1e-15);
        // grad(theta) - 2 * grad(2 theta) = 2 theta - 8 theta = -6 theta
        assert!((report.scaling_residual - 3.0).abs() < 1e-15);
    }

    #[test]
    fn invariance_residual_on_normalized_loss() {
        // L(theta) = <w, theta/|theta|> is scale invariant by construction
        let w = [1.0, 2.0, -0.5];
        let grad = move |theta: &ParamVector| -> Result<GradVector> {
            let norm = theta.norm();
            let u: Vec<f64> = theta.values().iter().map(|v| v / norm).collect();
            let wu: f64 = w.iter().zip(&u).map(|(a, b)| a * b).sum();
            Ok(GradVector::new(
                u.iter().zip(&w).map(|(ui, wi)| (wi - wu * ui) / norm).collect(),
            ))
        };
        let theta = ParamVector::single_group(vec![0.3, -1.2, 0.7]).unwrap();
        let report = check_scale_invariance(grad, &theta, 2.0).unwrap();
        assert!(report.orthogonality_residual < 1e-8);
        assert!(report.scaling_residual < 1e-8);
    }
}
