//! Energy–dissipation balance of a stationary or traveling solution:
//!
//! ```text
//!   ∫_{Ω[η]} (μ/2)|𝔻v|²  =  ∫_{Ω[η]} ℱ·v + ∫_{Σ[η]} 𝒯ν·v
//! ```
//!
//! Both sides are evaluated in flattened coordinates: `𝔻v∘𝔉 = 𝔻_𝒜w` with
//! `w = M^{−1}u`, volume element `J`, and `ν dS = 𝒩 dx` with
//! `𝒩 = (−∇_∥η, 1)`.  Horizontal integrals use the padded grid (exact for
//! the band-limited products involved); vertical integrals use
//! Clenshaw–Curtis weights.

use crate::error::Result;
use crate::geometry::GeometryPack;
use crate::linear::SolutionTriple;
use crate::params::Params;

use super::maps::{compose_nodes, sym_grad, top_offset, VelocityPack};
use super::StressForce;

/// Both sides of the balance and their relative gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalance {
    /// `∫(μ/2)|𝔻v|²`.
    pub dissipation: f64,
    /// `∫ℱ·v + ∫𝒯ν·v`.
    pub power: f64,
    /// `|dissipation − power| / max(dissipation, |power|)` (0 when both vanish).
    pub gap: f64,
}

/// Evaluates the energy balance for a physical solution triple.
pub fn energy_balance(sol: &SolutionTriple, params: &Params, data: &StressForce) -> Result<EnergyBalance> {
    let pack = GeometryPack::new(&sol.eta)?;
    let grid = pack.grid().clone();
    let m = grid.npad();
    let ny = grid.ny();
    let cell = grid.l() * grid.l() / (m * m) as f64;
    let weights = grid.cheb().weights();
    let vel = VelocityPack::new(&sol.u, &pack);
    let mu = params.viscosity;
    let n = pack.n_nodes();
    let force = compose_nodes(&data.f, &pack, 0..n)?;
    let mut dissipation = 0.0;
    let mut bulk_power = 0.0;
    for j in 0..ny {
        let mut d_row = 0.0;
        let mut p_row = 0.0;
        for s in 0..m * m {
            let q = j * m * m + s;
            let g = pack.node(q);
            let d = sym_grad(&vel.grad_at(q), &g.a());
            let sq: f64 = d.iter().flatten().map(|x| x * x).sum();
            d_row += 0.5 * mu * sq * g.j();
            p_row += (0..3).map(|i| force[i][q] * vel.w[i][q]).sum::<f64>() * g.j();
        }
        dissipation += weights[j] * d_row * cell;
        bulk_power += weights[j] * p_row * cell;
    }
    let top = top_offset(&grid);
    let flat: Vec<_> = data.t.iter().flatten().cloned().collect();
    let stress = compose_nodes(&flat, &pack, top..top + m * m)?;
    let mut surface_power = 0.0;
    for s in 0..m * m {
        let q = top + s;
        let g = pack.node(q);
        let nrm = [-g.grad[0], -g.grad[1], 1.0];
        for i in 0..3 {
            let tn: f64 = (0..3).map(|k| stress[3 * i + k][s] * nrm[k]).sum();
            surface_power += tn * vel.w[i][q];
        }
    }
    surface_power *= cell;
    let power = bulk_power + surface_power;
    let scale = dissipation.max(power.abs());
    let gap = if scale > 0.0 { (dissipation - power).abs() / scale } else { 0.0 };
    Ok(EnergyBalance { dissipation, power, gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn zero_solution_balances_trivially() {
        let g = make_grid(4.0, 8, 8, 1.0).unwrap();
        let b = energy_balance(&SolutionTriple::zeros(&g), &Params::default(), &StressForce::gaussian_force(4.0, 1.0, 1.0))
            .unwrap();
        assert_eq!((b.dissipation, b.power, b.gap), (0.0, 0.0, 0.0));
    }

    #[test]
    fn shear_flow_dissipation_matches_closed_form() {
        // u₁ = y on the flat slab: 𝔻v has two unit off-diagonal entries,
        // so the dissipation is (μ/2)·2·L²b
        let g = make_grid(4.0, 8, 8, 1.0).unwrap();
        let mut sol = SolutionTriple::zeros(&g);
        sol.u = crate::grid::BulkField::from_fn(&g, 3, |c, _, _, y| if c == 0 { y } else { 0.0 });
        let params = Params { viscosity: 0.7, ..Params::default() };
        let b = energy_balance(&sol, &params, &StressForce::zero()).unwrap();
        assert!((b.dissipation - 0.7 * 16.0).abs() < 1e-12);
        assert!(b.dissipation >= 0.0);
    }
}
