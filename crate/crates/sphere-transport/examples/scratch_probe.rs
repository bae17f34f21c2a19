use sphere_transport::geometry::{generate_phyllotaxis, CapGrid};
fn main() {
    for n in [100usize, 144, 196, 256, 324, 400] {
        let ps = generate_phyllotaxis(n).unwrap();
        let grid = CapGrid::new(&ps, 12.0 * ps.fill_distance()).unwrap();
        let min = (0..n).map(|i| grid.neighborhood(i).indices.len()).min().unwrap();
        println!("n={n}: min cap = {min}");
    }
}
