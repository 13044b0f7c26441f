fn main() {
    println!("regulab");
}
