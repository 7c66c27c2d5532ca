//! Regenerates `cases/krps35.case`.
//!
//! ```text
//! cargo run -p gridmodal --example gen_krps35 > crates/core/cases/krps35.case
//! ```

fn main() {
    print!("{}", gridmodal::cases::generate_krps35());
}
