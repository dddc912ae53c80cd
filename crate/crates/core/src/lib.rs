//! Graphic lambda calculus and chemlambda: port-graph rewriting, a lambda
//! calculus front end, a GLC actor simulator, and the knot sector with the
//! Kauffman bracket.

pub mod actors;
pub mod dot;
pub mod graph;
pub mod iso;
pub mod knot;
pub mod lambda;
pub mod laurent;
pub mod mol;
pub mod rack;
pub mod rewrite;

pub use actors::{prepare, ActorError, ActorSystem, LinkLabel, Scheduler, SchedulerPolicy};
pub use graph::{Dir, End, Node, NodeId, NodeKind, PortGraph, Scale, Violation, ViolationKind, WireId};
pub use iso::{is_isomorphic, IsoError};
pub use knot::{bracket, parse_pd, state_sum, KnotDiagram, KnotError};
pub use lambda::{graph_to_term, parse_term, term_to_graph, LambdaError, Term};
pub use laurent::Laurent;
pub use mol::{parse_mol, to_mol, MolError};
pub use rack::{check_rack, RackReport, RackTable};
pub use rewrite::{apply_move, find_sites, reduce, FanInWiring, Match, Mode, ReduceConfig, RewriteError, Rule, Strategy, Trace};
