//! Shared machinery for the integration and acceptance suites: end-to-end
//! ambient recovery on a model with the reference policy applied, and
//! model-based references to score against.

use gridresp::grid::{DampingSpec, GridCase, GridModel};
use gridresp::modal::{self, ImpulseResponse, ModalDecomposition, ResponseKind};
use gridresp::recovery::{self, RecoveredResponse, RecoveryConfig, ReferencePolicy};
use gridresp::sim::{simulate_ambient, AmbientConfig};
use gridresp::{ChannelId, TimeSeries};

pub fn wscc9_model(gamma: f64) -> GridModel {
    GridModel::from_case(&GridCase::wscc9(), DampingSpec::Uniform(gamma)).unwrap()
}

/// Generator `(id, inertia)` pairs of a model, for the weighted reference.
pub fn gen_inertia(model: &GridModel) -> Vec<(u32, f64)> {
    model
        .generator_ids
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, model.inertia[i]))
        .collect()
}

/// Source channel appropriate for recovering `kind` responses.
pub fn source_channel(kind: ResponseKind, source_gen: u32) -> ChannelId {
    match kind {
        ResponseKind::Frequency => ChannelId::GenFreq(source_gen),
        _ => ChannelId::GenAngle(source_gen),
    }
}

/// Simulate one ambient record and recover every target response from it.
/// All generator angle and frequency channels are simulated alongside the
/// targets so the reference policy has its inputs.
pub fn recover_from_ambient(
    model: &GridModel,
    cfg: &AmbientConfig,
    rcfg: &RecoveryConfig,
    source_gen: u32,
    targets: &[ChannelId],
) -> Vec<(ChannelId, RecoveredResponse)> {
    let mut wanted: Vec<ChannelId> = Vec::new();
    for &id in &model.generator_ids {
        wanted.push(ChannelId::GenAngle(id));
        wanted.push(ChannelId::GenFreq(id));
    }
    for t in targets {
        if !wanted.contains(t) {
            wanted.push(*t);
        }
    }
    let record = simulate_ambient(model, cfg, &wanted).unwrap();
    let prepared =
        recovery::subtract_reference(&record, &rcfg.reference, &gen_inertia(model)).unwrap();
    let by_name = |ch: &ChannelId| -> &TimeSeries {
        prepared
            .iter()
            .find(|ts| ts.channel == ch.to_string())
            .expect("channel simulated")
    };

    targets
        .iter()
        .map(|target| {
            let kind = ResponseKind::of_channel(target);
            let src = source_channel(kind, source_gen);
            let mut cfg_kind = rcfg.clone();
            cfg_kind.diff_order = recovery::default_diff_order(kind);
            let resp =
                recovery::recover_response(by_name(&src), by_name(target), kind, &cfg_kind)
                    .unwrap();
            (*target, resp)
        })
        .collect()
}

/// Model-based reference for a target on the same lag grid as a recovery
/// with horizon `max_lag`.
pub fn model_reference(
    dec: &ModalDecomposition,
    model: &GridModel,
    source_gen: u32,
    target: &ChannelId,
    step: f64,
    max_lag: f64,
) -> ImpulseResponse {
    let len = (max_lag / step).round() as usize + 1;
    modal::impulse_response(dec, model, source_gen, target, step, len).unwrap()
}

/// Mean NMSE per response kind over `(target, response)` pairs, scored
/// against the modal closed forms.
pub fn mean_nmse_by_kind(
    dec: &ModalDecomposition,
    model: &GridModel,
    source_gen: u32,
    recovered: &[(ChannelId, RecoveredResponse)],
    max_lag: f64,
) -> Vec<(ResponseKind, f64)> {
    let mut sums: Vec<(ResponseKind, f64, usize)> = Vec::new();
    for (target, resp) in recovered {
        let reference =
            model_reference(dec, model, source_gen, target, resp.sample_period, max_lag);
        let nmse = gridresp::metrics::normalized_mse(&reference, resp).unwrap();
        let kind = ResponseKind::of_channel(target);
        // rotor and bus angles are pooled: both are angle recoveries
        let kind = match kind {
            ResponseKind::BusAngle => ResponseKind::RotorAngle,
            k => k,
        };
        match sums.iter_mut().find(|(k, _, _)| *k == kind) {
            Some((_, s, n)) => {
                *s += nmse;
                *n += 1;
            }
            None => sums.push((kind, nmse, 1)),
        }
    }
    sums.into_iter().map(|(k, s, n)| (k, s / n as f64)).collect()
}

pub fn kind_mean(means: &[(ResponseKind, f64)], kind: ResponseKind) -> f64 {
    means.iter().find(|(k, _)| *k == kind).map(|(_, v)| *v).expect("kind present")
}

/// The standard WSCC-9 target set: frequency and rotor angle at every
/// generator, the three load-bus angles, and three spread-out line flows.
pub fn wscc9_targets() -> Vec<ChannelId> {
    vec![
        ChannelId::GenFreq(1),
        ChannelId::GenFreq(2),
        ChannelId::GenFreq(3),
        ChannelId::GenAngle(1),
        ChannelId::GenAngle(2),
        ChannelId::GenAngle(3),
        ChannelId::BusAngle(5),
        ChannelId::BusAngle(6),
        ChannelId::BusAngle(8),
        ChannelId::LineFlow(4, 5),
        ChannelId::LineFlow(7, 8),
        ChannelId::LineFlow(6, 9),
    ]
}
