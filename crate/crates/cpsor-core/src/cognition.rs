//! The cognitive node space: a fixed ordering of the driver-cognition
//! nodes, their DBN cardinalities, and reference models over them.
//!
//! Node order (stimulus, organism, response):
//! `Npc_a, Risk_grade, Emo_cluster, Ego_a, Sub_style, Obj_style,
//! Man_longi, Man_lateral[, Behavior]`. The behavior node is the coupled
//! (objective style, maneuver) label and can be excluded by configuration.
//!
//! Acceleration nodes are discretized in 0.2 m/s² bins; for the DBN the
//! signed bins are clamped into a configurable range so every node has a
//! finite cardinality.

use crate::dbn::{Cpt, DbnModel, DbnStructure, Frame, Layer, NodeDef, Prior};
use crate::discretize::{
    behavior_index, behavior_parts, CognitiveFrame, EmoCluster, ManLateral, ManLongi, ObjStyle,
    RiskGrade, SubStyle, ACCEL_BIN_WIDTH,
};

pub const NPC_A: usize = 0;
pub const RISK_GRADE: usize = 1;
pub const EMO_CLUSTER: usize = 2;
pub const EGO_A: usize = 3;
pub const SUB_STYLE: usize = 4;
pub const OBJ_STYLE: usize = 5;
pub const MAN_LONGI: usize = 6;
pub const MAN_LATERAL: usize = 7;
pub const BEHAVIOR: usize = 8;

/// Cardinalities and encoding rules for the cognitive DBN nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeSpace {
    /// Lowest acceleration bin kept distinct; lower bins clamp onto it.
    pub accel_bin_min: i32,
    /// Highest acceleration bin kept distinct.
    pub accel_bin_max: i32,
    /// Whether the coupled behavior node is part of the network.
    pub behavior_node: bool,
}

impl Default for NodeSpace {
    fn default() -> Self {
        // ±1.6 m/s² resolved at 0.2 m/s²; heavier maneuvers saturate the
        // edge bins. 16 acceleration states keep exact enumeration cheap.
        NodeSpace { accel_bin_min: -8, accel_bin_max: 7, behavior_node: true }
    }
}

impl NodeSpace {
    pub fn accel_cardinality(&self) -> usize {
        (self.accel_bin_max - self.accel_bin_min + 1) as usize
    }

    pub fn n_nodes(&self) -> usize {
        if self.behavior_node {
            9
        } else {
            8
        }
    }

    pub fn node_defs(&self) -> Vec<NodeDef> {
        let ac = self.accel_cardinality();
        let mut defs = vec![
            NodeDef::new("Npc_a", ac, Layer::S),
            NodeDef::new("Risk_grade", 3, Layer::S),
            NodeDef::new("Emo_cluster", 3, Layer::O),
            NodeDef::new("Ego_a", ac, Layer::O),
            NodeDef::new("Sub_style", 3, Layer::O),
            NodeDef::new("Obj_style", 3, Layer::R),
            NodeDef::new("Man_longi", 3, Layer::R),
            NodeDef::new("Man_lateral", 3, Layer::R),
        ];
        if self.behavior_node {
            defs.push(NodeDef::new("Behavior", 27, Layer::R));
        }
        defs
    }

    /// Clamps a signed acceleration bin into the modeled range and maps it
    /// to a state index.
    pub fn accel_state(&self, bin: i32) -> usize {
        (bin.clamp(self.accel_bin_min, self.accel_bin_max) - self.accel_bin_min) as usize
    }

    /// Acceleration (m/s²) at the center of a state's bin.
    pub fn accel_center(&self, state: usize) -> f64 {
        (self.accel_bin_min + state as i32) as f64 * ACCEL_BIN_WIDTH + 0.5 * ACCEL_BIN_WIDTH
    }

    /// Encodes a cognitive frame as DBN state indices in node order.
    pub fn encode(&self, frame: &CognitiveFrame) -> Frame {
        let mut states = vec![
            self.accel_state(frame.npc_a_bin),
            frame.risk_grade as usize,
            frame.emo_cluster as usize,
            self.accel_state(frame.ego_a_bin),
            frame.sub_style as usize,
            frame.obj_style as usize,
            frame.man_longi as usize,
            frame.man_lateral as usize,
        ];
        if self.behavior_node {
            states.push(frame.behavior as usize);
        }
        states
    }

    /// Decodes DBN state indices back into a cognitive frame. Acceleration
    /// bins come back as the representative (clamped) bin.
    pub fn decode(&self, states: &[usize]) -> CognitiveFrame {
        assert_eq!(states.len(), self.n_nodes(), "state vector width mismatch");
        let risk = [RiskGrade::Safe, RiskGrade::Moderate, RiskGrade::Danger][states[RISK_GRADE]];
        let emo = [EmoCluster::Anger, EmoCluster::Neutral, EmoCluster::Fright][states[EMO_CLUSTER]];
        let sub =
            [SubStyle::Aggressive, SubStyle::Neutral, SubStyle::Conservative][states[SUB_STYLE]];
        let (obj, longi, lateral) = if self.behavior_node {
            behavior_parts(states[BEHAVIOR] as u8)
        } else {
            (
                [ObjStyle::Gentle, ObjStyle::Moderate, ObjStyle::Hasty][states[OBJ_STYLE]],
                [ManLongi::Accelerate, ManLongi::Maintain, ManLongi::Decelerate][states[MAN_LONGI]],
                [ManLateral::LeftTurn, ManLateral::Straight, ManLateral::RightTurn]
                    [states[MAN_LATERAL]],
            )
        };
        CognitiveFrame::new(
            self.accel_bin_min + states[NPC_A] as i32,
            risk,
            emo,
            self.accel_bin_min + states[EGO_A] as i32,
            sub,
            obj,
            longi,
            lateral,
        )
    }

    /// Encodes per-episode frame series as DBN training sequences.
    pub fn encode_sequences(&self, per_episode: &[Vec<CognitiveFrame>]) -> Vec<Vec<Frame>> {
        per_episode
            .iter()
            .map(|frames| frames.iter().map(|f| self.encode(f)).collect())
            .collect()
    }

    /// Reconstructs the space a fitted model was built over. Acceleration
    /// bins follow the centered convention: cardinality 2k covers bins
    /// −k ..= k−1.
    pub fn infer(model: &DbnModel) -> Result<NodeSpace, crate::dbn::DbnError> {
        let nodes = &model.structure.nodes;
        let behavior_node = match nodes.len() {
            8 => false,
            9 => true,
            n => {
                return Err(crate::dbn::DbnError::Shape(format!(
                    "expected 8 or 9 cognitive nodes, model has {n}"
                )))
            }
        };
        let accel_card = nodes[NPC_A].cardinality;
        if accel_card < 2 || !accel_card.is_multiple_of(2) {
            return Err(crate::dbn::DbnError::Shape(format!(
                "acceleration cardinality {accel_card} must be even"
            )));
        }
        let half = (accel_card / 2) as i32;
        let space = NodeSpace {
            accel_bin_min: -half,
            accel_bin_max: half - 1,
            behavior_node,
        };
        for (got, want) in nodes.iter().zip(space.node_defs()) {
            if got.name != want.name || got.cardinality != want.cardinality {
                return Err(crate::dbn::DbnError::Shape(format!(
                    "node {} ({} states) does not fit the cognitive space ({} expects {})",
                    got.name, got.cardinality, want.name, want.cardinality
                )));
            }
        }
        Ok(space)
    }
}

/// The bundled exogenous-emotion baseline structure: subjective style, the
/// interacting vehicle's acceleration and the emotion itself all act as
/// root causes wired straight to the driver's actions (attitude and the
/// maneuvers). Emotion receives no inbound edges — it is an exogenous
/// variable directly affecting the final actions, which is precisely what
/// the stimulus → organism mediation of the SOR wiring replaces — and
/// nothing connects the environment to the attitude node, so the
/// acceleration response to the interacting vehicle is not represented.
/// The layout is deliberately not SOR-legal.
pub fn ordinary_structure(space: &NodeSpace) -> DbnStructure {
    let mut st = DbnStructure::new(space.node_defs());
    for (p, c) in [
        (NPC_A, MAN_LONGI),
        (NPC_A, MAN_LATERAL),
        (SUB_STYLE, EGO_A),
        (SUB_STYLE, MAN_LONGI),
        (SUB_STYLE, MAN_LATERAL),
        (EMO_CLUSTER, EGO_A),
        (EMO_CLUSTER, MAN_LONGI),
        (EMO_CLUSTER, MAN_LATERAL),
    ] {
        st.add_intra(p, c);
    }
    if space.behavior_node {
        st.add_intra(OBJ_STYLE, BEHAVIOR);
        st.add_intra(MAN_LONGI, BEHAVIOR);
        st.add_intra(MAN_LATERAL, BEHAVIOR);
    }
    debug_assert!(st.validate(Prior::Unconstrained).is_ok());
    st
}

/// The SOR-legal reference structure used by the synthetic ground truth:
/// stimulus drives emotion and attitude, which drive the responses.
pub fn sor_reference_structure(space: &NodeSpace) -> DbnStructure {
    let mut st = DbnStructure::new(space.node_defs());
    for (p, c) in [
        (NPC_A, EMO_CLUSTER),
        (RISK_GRADE, EMO_CLUSTER),
        (NPC_A, EGO_A),
        (EMO_CLUSTER, EGO_A),
        (SUB_STYLE, OBJ_STYLE),
        (EMO_CLUSTER, OBJ_STYLE),
        (EMO_CLUSTER, MAN_LONGI),
        (EGO_A, MAN_LONGI),
        (EMO_CLUSTER, MAN_LATERAL),
    ] {
        st.add_intra(p, c);
    }
    if space.behavior_node {
        st.add_intra(OBJ_STYLE, BEHAVIOR);
        st.add_intra(MAN_LONGI, BEHAVIOR);
        st.add_intra(MAN_LATERAL, BEHAVIOR);
    }
    debug_assert!(st.validate(Prior::Sor).is_ok());
    st
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    for x in &mut v {
        *x /= s;
    }
    v
}

fn mix(a: [f64; 3], b: [f64; 3], w: f64) -> Vec<f64> {
    normalized((0..3).map(|i| (1.0 - w) * a[i] + w * b[i]).collect())
}

/// Discretized Gaussian over acceleration states.
fn accel_gaussian(space: &NodeSpace, mean: f64, sigma: f64) -> Vec<f64> {
    normalized(
        (0..space.accel_cardinality())
            .map(|s| {
                let z = (space.accel_center(s) - mean) / sigma;
                (-0.5 * z * z).exp().max(1e-9)
            })
            .collect(),
    )
}

/// Sticky transition table: `stay` mass on the previous state, the rest
/// spread over neighbors by distance.
fn sticky_transition(node: usize, card: usize, stay: f64) -> Cpt {
    let mut table = Vec::with_capacity(card * card);
    for prev in 0..card {
        let row = normalized(
            (0..card)
                .map(|s| {
                    if s == prev {
                        stay
                    } else {
                        (1.0 - stay) * 0.5f64.powi((s as i32 - prev as i32).abs())
                    }
                })
                .collect(),
        );
        table.extend(row);
    }
    Cpt { child: node, parents: vec![node], parent_cards: vec![card], child_card: card, table }
}

fn uniform_transition(node: usize, card: usize) -> Cpt {
    Cpt {
        child: node,
        parents: vec![node],
        parent_cards: vec![card],
        child_card: card,
        table: vec![1.0 / card as f64; card * card],
    }
}

/// Synthetic ground-truth SOR model over the cognitive node space.
///
/// Conditionals are built from smooth parametric rules: danger and hard
/// braking by the interacting vehicle push emotion toward fright, anger
/// raises the attitude (own acceleration) while fright drops it sharply,
/// and the responses follow attitude and emotion. With `sticky = false`
/// every transition table is uniform, which makes consecutive slices
/// independent — convenient when a test wants clean conditional
/// frequencies.
pub fn true_sor_dbn(space: &NodeSpace, sticky: bool) -> DbnModel {
    let st = sor_reference_structure(space);
    let ac = space.accel_cardinality();
    let mut intra: Vec<Cpt> = Vec::with_capacity(st.n_nodes());

    // Npc_a: centered on mild coasting.
    intra.push(Cpt {
        child: NPC_A,
        parents: vec![],
        parent_cards: vec![],
        child_card: ac,
        table: accel_gaussian(space, -0.1, 0.8),
    });

    // Risk_grade prior: mostly safe.
    intra.push(Cpt {
        child: RISK_GRADE,
        parents: vec![],
        parent_cards: vec![],
        child_card: 3,
        table: vec![0.7, 0.18, 0.12],
    });

    // Emo_cluster | Npc_a, Risk_grade (parent order ascending: Npc_a first).
    {
        let mut table = Vec::with_capacity(ac * 3 * 3);
        for npc in 0..ac {
            let brake = (-space.accel_center(npc) / 1.2).clamp(0.0, 1.0);
            for risk in 0..3 {
                let base = match risk {
                    0 => [0.10, 0.78, 0.12],
                    1 => [0.30, 0.44, 0.26],
                    _ => [0.32, 0.14, 0.54],
                };
                table.extend(mix(base, [0.14, 0.06, 0.80], 0.55 * brake));
            }
        }
        intra.push(Cpt {
            child: EMO_CLUSTER,
            parents: vec![NPC_A, RISK_GRADE],
            parent_cards: vec![ac, 3],
            child_card: 3,
            table,
        });
    }

    // Ego_a | Npc_a, Emo_cluster: follow the interacting vehicle, shifted
    // up under anger and sharply down under fright.
    {
        let mut table = Vec::with_capacity(ac * 3 * ac);
        for npc in 0..ac {
            let follow = 0.55 * space.accel_center(npc);
            for emo in 0..3 {
                let (shift, sigma) = match emo {
                    0 => (0.35, 0.55),  // anger: pushy and erratic
                    1 => (0.0, 0.35),   // neutral
                    _ => (-0.75, 0.45), // fright: hard on the brakes
                };
                table.extend(accel_gaussian(space, follow + shift, sigma));
            }
        }
        intra.push(Cpt {
            child: EGO_A,
            parents: vec![NPC_A, EMO_CLUSTER],
            parent_cards: vec![ac, 3],
            child_card: ac,
            table,
        });
    }

    // Sub_style prior.
    intra.push(Cpt {
        child: SUB_STYLE,
        parents: vec![],
        parent_cards: vec![],
        child_card: 3,
        table: vec![0.3, 0.4, 0.3],
    });

    // Obj_style | Emo_cluster, Sub_style (Gentle, Moderate, Hasty).
    {
        let mut table = Vec::with_capacity(3 * 3 * 3);
        for emo in 0..3 {
            for sub in 0..3 {
                let base = match sub {
                    0 => [0.14, 0.36, 0.50], // aggressive self-image
                    1 => [0.30, 0.50, 0.20],
                    _ => [0.58, 0.32, 0.10], // conservative
                };
                let w = match emo {
                    0 => 0.40, // anger makes driving hastier
                    1 => 0.0,
                    _ => 0.20, // fright adds erratic handling
                };
                table.extend(mix(base, [0.05, 0.20, 0.75], w));
            }
        }
        intra.push(Cpt {
            child: OBJ_STYLE,
            parents: vec![EMO_CLUSTER, SUB_STYLE],
            parent_cards: vec![3, 3],
            child_card: 3,
            table,
        });
    }

    // Man_longi | Emo_cluster, Ego_a (Accelerate, Maintain, Decelerate).
    {
        let mut table = Vec::with_capacity(3 * ac * 3);
        for emo in 0..3 {
            for ego in 0..ac {
                let a = space.accel_center(ego);
                let accel = (1.0 + (a / 0.25)).clamp(0.05, 2.0);
                let decel = (1.0 - (a / 0.25)).clamp(0.05, 2.0);
                let maintain = (1.6 - 3.0 * a.abs()).clamp(0.05, 2.0);
                let emo_push = match emo {
                    0 => [1.25, 0.9, 0.85],
                    1 => [1.0, 1.1, 1.0],
                    _ => [0.7, 0.85, 1.45],
                };
                table.extend(normalized(vec![
                    accel * emo_push[0],
                    maintain * emo_push[1],
                    decel * emo_push[2],
                ]));
            }
        }
        intra.push(Cpt {
            child: MAN_LONGI,
            parents: vec![EMO_CLUSTER, EGO_A],
            parent_cards: vec![3, ac],
            child_card: 3,
            table,
        });
    }

    // Man_lateral | Emo_cluster (LeftTurn, Straight, RightTurn).
    intra.push(Cpt {
        child: MAN_LATERAL,
        parents: vec![EMO_CLUSTER],
        parent_cards: vec![3],
        child_card: 3,
        table: vec![
            0.20, 0.60, 0.20, // anger: busy steering
            0.06, 0.88, 0.06, // neutral
            0.14, 0.72, 0.14, // fright
        ],
    });

    // Behavior: deterministic coupling of its three parents.
    if space.behavior_node {
        let mut table = vec![0.0; 27 * 27];
        for obj in 0..3 {
            for longi in 0..3 {
                for lat in 0..3 {
                    let row = (obj * 3 + longi) * 3 + lat;
                    let idx = behavior_index(
                        [ObjStyle::Gentle, ObjStyle::Moderate, ObjStyle::Hasty][obj],
                        [ManLongi::Accelerate, ManLongi::Maintain, ManLongi::Decelerate][longi],
                        [ManLateral::LeftTurn, ManLateral::Straight, ManLateral::RightTurn][lat],
                    );
                    table[row * 27 + idx as usize] = 1.0;
                }
            }
        }
        intra.push(Cpt {
            child: BEHAVIOR,
            parents: vec![OBJ_STYLE, MAN_LONGI, MAN_LATERAL],
            parent_cards: vec![3, 3, 3],
            child_card: 27,
            table,
        });
    }

    let mut inter: Vec<Option<Cpt>> = Vec::with_capacity(st.n_nodes());
    for (node, def) in st.nodes.iter().enumerate() {
        let cpt = if !sticky {
            uniform_transition(node, def.cardinality)
        } else {
            match node {
                NPC_A | EGO_A => sticky_transition(node, def.cardinality, 0.55),
                RISK_GRADE => sticky_transition(node, def.cardinality, 0.8),
                EMO_CLUSTER => sticky_transition(node, def.cardinality, 0.85),
                SUB_STYLE => sticky_transition(node, def.cardinality, 0.98),
                BEHAVIOR => uniform_transition(node, def.cardinality),
                _ => sticky_transition(node, def.cardinality, 0.6),
            }
        };
        inter.push(Some(cpt));
    }

    let model = DbnModel::new(st, intra, inter, 0);
    debug_assert!(model.validate().is_ok());
    model
}
