use serde::Serialize;

use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::net::{Label, LabelledNet, NetBuilder, Node, PlaceId, TransId};

/// Where an element of an asynchronous implementation comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AsyncOrigin {
    Original,
    /// The buffer `s_t` between preplace `s` and its remote transition `t`.
    BufferPlace { place: PlaceId, transition: TransId },
    /// The silent transition `t_s` moving a token from `s` into `s_t`.
    BufferTransition { place: PlaceId, transition: TransId },
}

/// An asynchronous implementation. Original places and transitions keep
/// their identifiers; buffers come after them.
#[derive(Debug, Clone)]
pub struct AsyncNet {
    pub net: LabelledNet,
    pub place_origin: Vec<AsyncOrigin>,
    pub trans_origin: Vec<AsyncOrigin>,
}

impl AsyncNet {
    /// The `(s, t)` whose buffer place `p` is.
    pub fn buffer_of(&self, p: PlaceId) -> Option<(PlaceId, TransId)> {
        match self.place_origin[p.index()] {
            AsyncOrigin::BufferPlace { place, transition } => Some((place, transition)),
            _ => None,
        }
    }

    pub fn is_buffer_transition(&self, t: TransId) -> bool {
        matches!(self.trans_origin[t.index()], AsyncOrigin::BufferTransition { .. })
    }

    /// Provenance as `{places: {name: origin}, transitions: {name: origin}}`
    /// with element references given by name.
    pub fn provenance_json(&self, source: &LabelledNet) -> serde_json::Value {
        let describe = |o: &AsyncOrigin| match *o {
            AsyncOrigin::Original => serde_json::json!({"kind": "original"}),
            AsyncOrigin::BufferPlace { place, transition } => serde_json::json!({
                "kind": "buffer_place",
                "place": source.place_name(place),
                "transition": source.trans_name(transition),
            }),
            AsyncOrigin::BufferTransition { place, transition } => serde_json::json!({
                "kind": "buffer_transition",
                "place": source.place_name(place),
                "transition": source.trans_name(transition),
            }),
        };
        let places: serde_json::Map<_, _> = self
            .net
            .places()
            .map(|p| (self.net.place_name(p).to_string(), describe(&self.place_origin[p.index()])))
            .collect();
        let trans: serde_json::Map<_, _> = self
            .net
            .transitions()
            .map(|t| (self.net.trans_name(t).to_string(), describe(&self.trans_origin[t.index()])))
            .collect();
        serde_json::json!({"places": places, "transitions": trans})
    }
}

/// Inserts a buffer place and a silent transition on every arc from a
/// place to a transition at a different location.
pub fn async_implementation(net: &LabelledNet, d: &Distribution) -> Result<AsyncNet> {
    if !d.covers(net) {
        return Err(Error::DistributionMismatch {
            expected: net.place_count() + net.transition_count(),
            found: d.location_count(),
        });
    }
    let mut b = NetBuilder::new();
    b.set_name(net.name().map(|n| format!("{n}_async")));
    let mut place_origin = Vec::new();
    let mut trans_origin = Vec::new();
    for p in net.places() {
        b.add_place(net.place_name(p), net.is_marked_initially(p)).expect("names are unique");
        place_origin.push(AsyncOrigin::Original);
    }
    for t in net.transitions() {
        b.add_transition(net.trans_name(t), net.label(t).clone()).expect("names are unique");
        trans_origin.push(AsyncOrigin::Original);
    }
    for t in net.transitions() {
        for s in net.pre(t).iter() {
            if d.same(Node::Place(s), Node::Trans(t)) {
                b.input(s, t).expect("fresh arc");
                continue;
            }
            let (sn, tn) = (net.place_name(s), net.trans_name(t));
            let buf = b.add_place(&b.fresh_name(&format!("{sn}__{tn}")), false).unwrap();
            let mover = b.add_transition(&b.fresh_name(&format!("{tn}__{sn}")), Label::Tau).unwrap();
            place_origin.push(AsyncOrigin::BufferPlace { place: s, transition: t });
            trans_origin.push(AsyncOrigin::BufferTransition { place: s, transition: t });
            b.input(s, mover).unwrap();
            b.output(mover, buf).unwrap();
            b.input(buf, t).unwrap();
        }
        for s in net.post(t).iter() {
            b.output(t, s).unwrap();
        }
    }
    Ok(AsyncNet {
        net: b.build(),
        place_origin,
        trans_origin,
    })
}
