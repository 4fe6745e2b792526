#![no_main]

use doblab_core::sim::{parse_scenario, ReferenceKind};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(file) = parse_scenario(text) {
        // Anything the parser accepts must also build.
        let traj = match file.reference {
            ReferenceKind::Step => None,
            ReferenceKind::Trajectory => Some(vec![0.0; (file.duration / file.ts).round() as usize]),
        };
        let sc = file.build(traj).expect("accepted scenario failed to build");
        assert!(sc.steps() >= 1);
    }
});
