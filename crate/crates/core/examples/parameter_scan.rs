//! A custom scan driven by an in-memory config, printed as CSV.

use cavity_ms::harness::config::{scan, Config};

const CONFIG: &str = "
[system]
model = effective
units = natural
chi = 0
g_eff = 1
delta = 4

[scan]
parameter = chi
start = 0
end = 0.3
points = 7
";

fn main() -> cavity_ms::Result<()> {
    let cfg = Config::parse(CONFIG)?;
    print!("{}", scan(&cfg)?.to_csv());
    Ok(())
}
