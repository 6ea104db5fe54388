// placeholder until core is complete
fn main() {}
