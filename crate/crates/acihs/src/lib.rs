pub mod confocal;
pub mod cubic;
pub mod mumford;
pub mod poly;
pub mod polymat;
pub mod selftest;
