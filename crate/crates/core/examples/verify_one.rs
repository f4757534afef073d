use convex_torus::verify::criterion;

fn main() {
    for a in std::env::args().skip(1) {
        println!("{}", criterion(a.parse().unwrap(), None).line());
    }
}
