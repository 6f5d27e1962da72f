//! Pitch/yaw conventions and the angular error metric.
//!
//! cargo run --example gaze_geometry

use eyegaze::geometry::{angular_error_deg, GazeAngles};

fn main() -> eyegaze::Result<()> {
    let straight = GazeAngles::new(0.0, 0.0)?;
    let v = straight.to_vector();
    println!("looking straight: vector ({:.3}, {:.3}, {:.3})", v.x, v.y, v.z);

    for (p, y) in [(0.1, 0.0), (0.0, 0.1), (0.2, -0.3), (-0.5, 0.7)] {
        let g = GazeAngles::new(p, y)?;
        let back = g.to_vector().to_angles()?;
        println!(
            "pitch {p:+.2} yaw {y:+.2}: {:.3} deg from straight, round trip ({:+.6}, {:+.6})",
            angular_error_deg(g, straight),
            back.pitch(),
            back.yaw()
        );
    }

    match GazeAngles::new(1.6, 0.0) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
