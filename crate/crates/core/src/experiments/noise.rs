use crate::ansatz::LayeredAnsatz;
use crate::error::{Error, Result};
use crate::qmath::{apply_channel, DensityMatrix, Gate, KrausChannel};
use crate::vqse::Evolution;

/// Gate noise: depolarizing after every one- and two-qubit gate, then
/// amplitude damping on each touched qubit.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct NoiseSpec {
    pub p_depol_1q: f64,
    pub p_depol_2q: f64,
    pub gamma_ad: f64,
}

impl NoiseSpec {
    pub fn depolarizing(p_1q: f64, p_2q: f64) -> Self {
        Self {
            p_depol_1q: p_1q,
            p_depol_2q: p_2q,
            gamma_ad: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_depol_1q", self.p_depol_1q),
            ("p_depol_2q", self.p_depol_2q),
            ("gamma_ad", self.gamma_ad),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("{name} = {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p_depol_1q == 0.0 && self.p_depol_2q == 0.0 && self.gamma_ad == 0.0
    }
}

/// Circuit simulator applying `NoiseSpec` after each gate.
#[derive(Clone, Debug)]
pub struct NoisyCircuit {
    spec: NoiseSpec,
    depol_1q: Option<KrausChannel>,
    depol_2q: Option<KrausChannel>,
    damping: Option<KrausChannel>,
}

impl NoisyCircuit {
    pub fn new(spec: NoiseSpec) -> Result<Self> {
        spec.validate()?;
        let nonzero = |p: f64| p > 0.0;
        Ok(Self {
            spec,
            depol_1q: nonzero(spec.p_depol_1q)
                .then(|| KrausChannel::depolarizing(1, spec.p_depol_1q))
                .transpose()?,
            depol_2q: nonzero(spec.p_depol_2q)
                .then(|| KrausChannel::depolarizing(2, spec.p_depol_2q))
                .transpose()?,
            damping: nonzero(spec.gamma_ad)
                .then(|| KrausChannel::amplitude_damping(spec.gamma_ad))
                .transpose()?,
        })
    }

    pub fn spec(&self) -> NoiseSpec {
        self.spec
    }

    pub fn run(&self, rho: &DensityMatrix, gates: &[Gate]) -> Result<DensityMatrix> {
        let mut out = rho.clone();
        for g in gates {
            out = g.apply(&out)?;
            let depol = match g.arity() {
                1 => &self.depol_1q,
                2 => &self.depol_2q,
                k => return Err(Error::InvalidArgument(format!("no noise model for {k}-qubit gates"))),
            };
            if let Some(ch) = depol {
                out = apply_channel(&out, ch, &g.targets)?;
            }
            if let Some(ch) = &self.damping {
                for &q in &g.targets {
                    out = apply_channel(&out, ch, &[q])?;
                }
            }
        }
        Ok(out)
    }
}

impl Evolution for NoisyCircuit {
    fn evolve(&self, rho: &DensityMatrix, a: &LayeredAnsatz) -> Result<DensityMatrix> {
        if self.spec.is_noiseless() {
            return a.apply(rho);
        }
        self.run(rho, &a.gates())
    }

    fn is_unitary(&self) -> bool {
        self.spec.is_noiseless()
    }
}
