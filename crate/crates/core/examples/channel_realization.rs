//! Drop APs and users, assign pilots, and print each user's estimation
//! quality and full-power uplink rate.

use cellfree_fl::channel::{assign_pilots, generate_network, mmse_stats, watts_to_dbm, RateModel, SystemParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let params = SystemParams::default();
    let net = generate_network(&params, seed)?;
    let pilots = assign_pilots(&net, params.pilot_len);
    let stats = mmse_stats(&net, &pilots, &params);
    let model = RateModel::new(&stats);
    let p = vec![1.0; params.users];

    println!(
        "M = {}, N = {}, K = {}, τ_p = {}, σ² = {:.1} dBm, prelog = {}",
        params.aps,
        params.antennas,
        params.users,
        params.pilot_len,
        watts_to_dbm(params.sigma2()),
        params.prelog()
    );
    println!("pilots orthogonal: {}", pilots.is_orthogonal());
    println!("{:>4} {:>6} {:>12} {:>10} {:>10} {:>12}", "user", "pilot", "Σβ (dB)", "Σγ/Σβ", "SINR", "rate Mbit/s");
    for j in 0..params.users {
        let beta: f64 = net.beta.iter().map(|row| row[j]).sum();
        let gamma: f64 = stats.gamma.iter().map(|row| row[j]).sum();
        println!(
            "{:>4} {:>6} {:>12.2} {:>10.4} {:>10.3} {:>12.3}",
            j,
            pilots.pilot_index[j],
            10.0 * beta.log10(),
            gamma / beta,
            model.sinr(&p, j),
            model.rate(&p, j) / 1e6
        );
    }
    Ok(())
}
