//! End-to-end run: pump propagation, emission operators and observables.

use std::collections::BTreeMap;

use crate::emission::{EmissionOperators, EmissionOptions, MatrixContext};
use crate::error::Result;
use crate::linear::{propagate_pump, PumpField, PumpSpec};
use crate::modes::Channel;
use crate::observables::{channel_observables, ChannelObservables};
use crate::spectral::SpectralSetup;
use crate::structure::Structure;

#[derive(Debug, Clone)]
pub struct Simulation {
    pub structure: Structure,
    pub pump: PumpSpec,
    pub setup: SpectralSetup,
    pub options: EmissionOptions,
    /// Channels to evaluate; all sixteen when empty.
    pub channels: Vec<Channel>,
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub pump: PumpField,
    pub emission: EmissionOperators,
    pub channels: BTreeMap<Channel, ChannelObservables>,
}

impl Simulation {
    pub fn new(structure: Structure, pump: PumpSpec, setup: SpectralSetup) -> Self {
        Simulation {
            structure,
            pump,
            setup,
            options: EmissionOptions::default(),
            channels: Vec::new(),
        }
    }

    pub fn run(&self) -> Result<SimulationOutput> {
        let pump = propagate_pump(&self.structure, &self.pump, self.setup.pairs.omegas())?;
        let ctx = MatrixContext::new(&self.structure, &self.setup, &pump)?;
        let emission = ctx.total_emission_g(&self.options)?;
        let list: Vec<Channel> = if self.channels.is_empty() {
            Channel::all().collect()
        } else {
            self.channels.clone()
        };
        let mut channels = BTreeMap::new();
        for ch in list {
            channels.insert(ch, channel_observables(&emission, &self.setup, ch)?);
        }
        Ok(SimulationOutput {
            pump,
            emission,
            channels,
        })
    }
}
