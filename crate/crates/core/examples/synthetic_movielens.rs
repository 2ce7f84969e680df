//! Writes a synthetic data set in MovieLens `::` format.
//!
//! `cargo run --release -p ucmf --example synthetic_movielens -- OUT_DIR [USERS ITEMS TAGS RATINGS_PER_USER]`

use ucmf::synthetic::{generate, write_movielens, SyntheticConfig};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(out) = args.first() else {
        eprintln!("usage: synthetic_movielens OUT_DIR [USERS ITEMS TAGS RATINGS_PER_USER]");
        std::process::exit(1);
    };
    let num = |i: usize, default: usize| args.get(i).map_or(default, |v| v.parse().expect("numeric argument"));
    let config = SyntheticConfig {
        users: num(1, 300),
        items: num(2, 240),
        tags: num(3, 12),
        ratings_per_user: num(4, 30),
        ..Default::default()
    };
    let data = generate(&config).expect("valid synthetic config");
    write_movielens(&data, out).expect("writable output directory");
    println!(
        "{} users, {} items, {} ratings written to {out}",
        data.ratings.n_users(),
        data.ratings.n_items(),
        data.ratings.len()
    );
}
