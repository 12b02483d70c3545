pub mod gf2;
pub mod gldpc;
pub mod idd;
pub mod llr;
pub mod mimo;
pub mod modem;
pub mod polar;
pub mod sim;
pub mod siso;
