//! Unified handle over the four trainable architectures so experiment
//! drivers can treat them interchangeably.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, NodeId};
use crate::error::{Error, Result};
use crate::expr::SymbolicExpr;
use crate::ginn::GinnModel;
use crate::ginnkan::GinnKanModel;
use crate::kan::KanModel;
use crate::nn::{FcModel, GraphModel, MaintenanceCtx, ParameterStore};

pub const FC_HIDDEN_LAYERS: usize = 5;
pub const FC_WIDTH: usize = 32;
pub const KAN_HIDDEN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Fc,
    Ginn,
    Kan,
    GinnKan,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Fc,
        ModelKind::Ginn,
        ModelKind::Kan,
        ModelKind::GinnKan,
    ];

    /// The architectures with closed-form extraction.
    pub const INTERPRETABLE: [ModelKind; 3] =
        [ModelKind::Ginn, ModelKind::Kan, ModelKind::GinnKan];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Fc => "fc",
            ModelKind::Ginn => "ginn",
            ModelKind::Kan => "kan",
            ModelKind::GinnKan => "ginn-kan",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fc" => Ok(ModelKind::Fc),
            "ginn" => Ok(ModelKind::Ginn),
            "kan" => Ok(ModelKind::Kan),
            "ginn-kan" | "ginnkan" => Ok(ModelKind::GinnKan),
            other => Err(Error::UnknownModelKind(other.to_string())),
        }
    }
}

/// Any of the four architectures behind one [`GraphModel`] facade.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnyModel {
    Fc(FcModel),
    Ginn(GinnModel),
    Kan(KanModel),
    GinnKan(GinnKanModel),
}

impl AnyModel {
    /// Fresh model of `kind` with data-dependent preprocessing (input
    /// shifts / normalizers) fitted to the given feature columns.
    pub fn new(kind: ModelKind, features: &[Vec<f64>], rng: &mut impl Rng) -> Self {
        let d = features.len();
        match kind {
            ModelKind::Fc => {
                let mut m = FcModel::new(d, FC_HIDDEN_LAYERS, FC_WIDTH, rng);
                m.fit_normalizer(features);
                AnyModel::Fc(m)
            }
            ModelKind::Ginn => {
                let mut m = GinnModel::new(d, rng);
                m.fit_shift(features);
                AnyModel::Ginn(m)
            }
            ModelKind::Kan => {
                let mut m = KanModel::new(d, KAN_HIDDEN, rng);
                m.fit_normalizer(features);
                AnyModel::Kan(m)
            }
            ModelKind::GinnKan => {
                let mut m = GinnKanModel::new(d, rng);
                m.fit_shift(features);
                AnyModel::GinnKan(m)
            }
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            AnyModel::Fc(_) => ModelKind::Fc,
            AnyModel::Ginn(_) => ModelKind::Ginn,
            AnyModel::Kan(_) => ModelKind::Kan,
            AnyModel::GinnKan(_) => ModelKind::GinnKan,
        }
    }

    /// Closed-form expression of the trained model; errors for the FC
    /// baseline, which has no extraction procedure.
    pub fn extract_equation(&self) -> Result<SymbolicExpr> {
        match self {
            AnyModel::Fc(_) => Err(Error::Msg(
                "fc models do not support equation extraction".into(),
            )),
            AnyModel::Ginn(m) => m.extract_equation(),
            AnyModel::Kan(m) => m.extract_equation(),
            AnyModel::GinnKan(m) => m.extract_equation(),
        }
    }
}

macro_rules! dispatch {
    ($self:expr, $m:ident => $body:expr) => {
        match $self {
            AnyModel::Fc($m) => $body,
            AnyModel::Ginn($m) => $body,
            AnyModel::Kan($m) => $body,
            AnyModel::GinnKan($m) => $body,
        }
    };
}

impl GraphModel for AnyModel {
    fn input_dim(&self) -> usize {
        dispatch!(self, m => m.input_dim())
    }

    fn store(&self) -> &ParameterStore {
        dispatch!(self, m => m.store())
    }

    fn store_mut(&mut self) -> &mut ParameterStore {
        dispatch!(self, m => m.store_mut())
    }

    fn build_forward(&self, g: &mut Graph, x: &[NodeId]) -> NodeId {
        dispatch!(self, m => m.build_forward(g, x))
    }

    fn maintenance(&mut self, ctx: MaintenanceCtx) -> bool {
        dispatch!(self, m => m.maintenance(ctx))
    }

    fn max_derivative_order(&self) -> Option<usize> {
        dispatch!(self, m => m.max_derivative_order())
    }
}
