//! Tabular planning and reinforcement learning on grid worlds and small
//! graphs: Dijkstra, synchronous/asynchronous value iteration, model-free
//! exploration, tabular Q-learning with derandomized and stochastic
//! updates, analytical checks relating cost, reward, discounting and
//! episodic resets, and a seeded benchmark harness.

pub mod analysis;
pub mod corpus;
pub mod dp;
pub mod harness;
pub mod mdp;
pub mod qlearn;
