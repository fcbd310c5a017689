pub mod agents;
pub mod analytics;
pub mod blockdag;
pub mod experiment;
pub mod finality;
pub mod hash;
pub mod incentives;
pub mod netsim;
pub mod rules;
pub mod vrf_beacon;
