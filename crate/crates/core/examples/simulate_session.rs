//! Runs the three synthetic profiles and prints their reports.

use mediator::sim::{simulate, Profile, SimOptions};

fn main() {
    for profile in Profile::ALL {
        let run = simulate(&SimOptions::new(profile, 42, 30), None).expect("simulation runs");
        println!("{}", run.report.summary());
    }
}
