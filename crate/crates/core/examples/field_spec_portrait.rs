//! Parse a field from the text format and render its phase portrait.

use filippov::fieldspec::FieldSpec;
use filippov::flow::Window;
use filippov::portrait::{render_svg, PortraitOptions};
use filippov::report::write_atomic;
use filippov::tolerances::Tolerances;

const SPEC: &str = "\
# sliding for x > 0, sewing for x < 0
degree 1
[P1]
0 0 1
[Q1]
0 0 -1
[P2]
0 0 1
[Q2]
1 0 1
[options]
window -2,2,-2,2
";

fn main() {
    let spec = FieldSpec::parse(SPEC).expect("valid spec");
    let z = spec.to_field();
    let window = spec.options.window.map(filippov::fieldspec::window_from).unwrap_or(Window::square(2.0));
    let opts = PortraitOptions { compactified: true, ..PortraitOptions::new(window) };
    let svg = render_svg(&z, &opts, &Tolerances::default());

    let path = std::env::temp_dir().join("filippov_portrait.svg");
    write_atomic(&path, svg.as_bytes()).expect("write");
    println!("{} bytes written to {}", svg.len(), path.display());
    println!("round trip:\n{}", spec.to_text());
}
