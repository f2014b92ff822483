pub mod experiment;
pub mod km;
pub mod maps;
pub mod numeric;
pub mod product;
pub mod rates;
pub mod spaces;
pub mod suite;
pub mod uafpp;
