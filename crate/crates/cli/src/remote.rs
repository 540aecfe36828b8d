use anyhow::bail;
use clap::{Args, ValueEnum};

use gridrts_client::Client;
use gridrts_core::rng::SplitMix64;
use gridrts_core::PrimitiveAction;
use gridrts_protocol::{Controller, Create, Layer, Mode, Seat};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Policy {
    /// Uniform over the 16 primitive actions.
    Random,
    /// Always NoAction.
    Noop,
}

#[derive(Args, Debug)]
pub struct RemoteArgs {
    /// Server socket URL.
    #[arg(long, default_value = "ws://127.0.0.1:8080/ws")]
    url: String,
    #[arg(long, default_value = "15x15-2-FFA")]
    scenario: String,
    /// Controller for every other seat: random or rule_based.
    #[arg(long, default_value = "rule_based")]
    opponent: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Policy::Random)]
    policy: Policy,
    /// Pace the game on the wall clock instead of lock-step.
    #[arg(long)]
    real_time: bool,
}

pub fn remote(args: RemoteArgs) -> anyhow::Result<()> {
    let opponent = match args.opponent.as_str() {
        "random" => Controller::Random,
        "rule_based" => Controller::RuleBased,
        other => bail!("unknown opponent '{other}' (random or rule_based)"),
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let mut client = Client::connect(&args.url).await?;
        let Some(info) = client.hello().scenarios.iter().find(|s| s.name == args.scenario).cloned() else {
            bail!("server does not offer scenario '{}'", args.scenario);
        };
        let mut players = vec![Seat { controller: Controller::Remote }];
        players.extend((1..info.players).map(|_| Seat { controller: opponent }));
        let created = client
            .create(Create {
                scenario: args.scenario.clone(),
                config: Default::default(),
                seed: args.seed,
                players,
                mode: if args.real_time { Mode::RealTime } else { Mode::LockStep },
                frame_skip: None,
                turn_timeout_ms: None,
            })
            .await?;
        let seat = &created.seats[0];
        eprintln!("game {} created; playing seat {}", created.game_id, seat.player);
        let mut rng = SplitMix64::new(args.seed ^ 0x5eed);
        loop {
            let action = match args.policy {
                Policy::Random => rng.below(PrimitiveAction::COUNT as u64) as u32,
                Policy::Noop => PrimitiveAction::NoAction.id() as u32,
            };
            let r = client.act(created.game_id, seat.player, &seat.token, Layer::Primitive, action).await?;
            if r.done {
                let winner = r.winner.map_or("draw".to_string(), |w| format!("player {w}"));
                println!("game {} over at tick {}: {winner}, our score {}", created.game_id, r.tick, r.score);
                return Ok(());
            }
        }
    })
}
