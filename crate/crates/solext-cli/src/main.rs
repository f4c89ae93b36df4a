fn main() {
    println!("solext");
}
