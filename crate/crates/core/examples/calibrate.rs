use convex_torus::engine::{calibrate, CalibrationOptions};

fn main() {
    let t = std::time::Instant::now();
    let c = calibrate(&CalibrationOptions::default()).unwrap();
    println!("{}", serde_json::to_string_pretty(&c).unwrap());
    println!("{:?}", t.elapsed());
}
