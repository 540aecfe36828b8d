//! Tick loop, entity state machine and the economy/combat/build cycles.

use std::collections::VecDeque;

use crate::actions::PrimitiveAction;
use crate::config::GameConfig;
use crate::error::{EngineError, Result};
use crate::map::{Pos, ResourceKind, NEIGHBOR_OFFSETS};
use crate::pathfinding::{search_bfs, search_jps, GridView, PathQuery};
use crate::rng::SplitMix64;
use crate::rules::ArchetypeId;
use crate::scenarios::ScenarioSpec;
use crate::state::{
    Entity, EntityId, EntityState, GameState, Goal, Outcome, Player, ResourceBag, Target, TickStatus,
    TickTimer,
};
use crate::config::PathAlgorithm;

/// What an accepted primitive action will do. `None` from the planner means
/// the action resolves to a no-op.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Effect {
    Nothing,
    Select(EntityId),
    Move { unit: EntityId, to: Pos },
    Attack { unit: EntityId, target: EntityId },
    Harvest { unit: EntityId, tile: Pos },
    Construct { builder: EntityId, archetype: ArchetypeId, at: Pos },
    Train { building: EntityId, archetype: ArchetypeId, at: Pos },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ActionOutcome {
    /// The action was illegal in this state and had no effect.
    pub ignored: bool,
}

/// Occupancy-aware walkability as seen by one moving entity.
struct MoverView<'a> {
    state: &'a GameState,
    mover: EntityId,
}

impl GridView for MoverView<'_> {
    fn width(&self) -> i32 {
        self.state.map.width()
    }
    fn height(&self) -> i32 {
        self.state.map.height()
    }
    #[inline]
    fn walkable(&self, p: Pos) -> bool {
        match self.state.map.get(p) {
            Some(t) => t.is_open_ground() && t.occupant.is_none_or(|o| o == self.mover),
            None => false,
        }
    }
}

impl GameState {
    /// Builds the initial state: one Idle Worker per player on its spawn tile
    /// (plus a Town-Hall next to it with `instant_town_hall`).
    pub fn new_game(config: GameConfig, scenario: &ScenarioSpec, seed: u64) -> Result<GameState> {
        config.validate()?;
        let rules = scenario.rules.clone();
        let mut map = scenario.map.clone();
        for (player, &spawn) in scenario.spawns.iter().enumerate() {
            if !map.in_bounds(spawn) || !map.tile(spawn).is_open_ground() {
                return Err(EngineError::Spawn {
                    tile: spawn,
                    reason: format!("spawn of player {player} is not walkable"),
                });
            }
            if scenario.spawns[..player].contains(&spawn) {
                return Err(EngineError::Spawn {
                    tile: spawn,
                    reason: format!("spawn of player {player} overlaps another player"),
                });
            }
        }
        let mut rng = SplitMix64::new(seed);
        scenario.decorate(&mut map, &mut rng);

        let players = scenario
            .spawns
            .iter()
            .map(|&spawn| Player {
                resources: ResourceBag {
                    gold: rules.start_gold.clamp(0, config.resource_cap),
                    lumber: rules.start_lumber.clamp(0, config.resource_cap),
                    oil: rules.start_oil.clamp(0, config.resource_cap),
                    ..ResourceBag::default()
                },
                selected: None,
                score: 0,
                alive: true,
                harvested: 0,
                food_supply: 0,
                spawn,
            })
            .collect();
        let mut state = GameState {
            config,
            rules,
            map,
            players,
            entities: Vec::new(),
            next_id: 0,
            tick: 0,
            rng,
            terminal: None,
            episode_ticks: scenario.episode_ticks,
            vision: Vec::new(),
        };
        for player in 0..state.players.len() {
            let spawn = state.players[player].spawn;
            let worker = state.spawn_entity(player, state.rules.worker(), spawn, EntityState::Idle)?;
            state.players[player].selected = Some(worker);
        }
        if state.config.instant_town_hall {
            for player in 0..state.players.len() {
                let spawn = state.players[player].spawn;
                let at = state.free_neighbor(spawn).ok_or_else(|| EngineError::Spawn {
                    tile: spawn,
                    reason: "no free tile for the starting Town-Hall".into(),
                })?;
                state.spawn_entity(player, state.rules.town_hall(), at, EntityState::Idle)?;
            }
        }
        state.refresh_vision();
        Ok(state)
    }

    /// Places an entity directly (scenario setup, benchmarks, fixtures).
    /// `Spawning` entities get the regular build/train timer; every other
    /// state starts without a timer.
    pub fn spawn_entity(
        &mut self,
        owner: usize,
        archetype: ArchetypeId,
        at: Pos,
        state: EntityState,
    ) -> Result<EntityId> {
        if owner >= self.players.len() {
            return Err(EngineError::PlayerOutOfRange(owner));
        }
        self.map.check_bounds(at)?;
        if !self.map.is_free(at) {
            return Err(EngineError::Spawn { tile: at, reason: "tile is not free".into() });
        }
        let kind = self.rules.get(archetype);
        let timer = (state == EntityState::Spawning).then(|| {
            TickTimer::new(if kind.is_building() {
                self.config.build_ticks()
            } else {
                self.config.train_ticks()
            })
        });
        let (max_hp, is_unit, food_cost, food_provided) =
            (kind.max_hp, kind.is_unit(), kind.food_cost, kind.food_provided);
        let id = EntityId(self.next_id);
        self.next_id += 1;
        self.entities.push(Entity {
            id,
            owner,
            archetype,
            pos: at,
            hp: max_hp,
            state,
            timer,
            route: Vec::new(),
            goal: None,
            target: None,
            last_attacker: None,
        });
        self.map.tile_mut(at).occupant = Some(id);
        let limit = self.config.food_limit;
        let player = &mut self.players[owner];
        if is_unit {
            player.alive = true;
            player.resources.unit_count += 1;
            player.resources.food_used += food_cost;
        } else if state != EntityState::Spawning {
            player.food_supply += food_provided;
        }
        player.refresh_food_cap(limit);
        if self.config.fog_of_war {
            self.refresh_vision();
        }
        Ok(id)
    }

    /// Advances one tick: timers count down in ascending entity-id order and
    /// fire their effects, then dead entities are removed and the terminal
    /// condition is evaluated.
    pub fn tick(&mut self) -> TickStatus {
        if self.terminal.is_some() {
            return TickStatus::AlreadyTerminal;
        }
        self.tick += 1;
        let count = self.entities.len();
        for i in 0..count {
            if self.entities[i].is_alive() {
                self.update_entity(i);
            }
        }
        self.end_of_tick();
        TickStatus::Advanced
    }

    fn end_of_tick(&mut self) {
        if self.entities.iter().any(|e| !e.is_alive()) {
            self.entities.retain(Entity::is_alive);
            for p in 0..self.players.len() {
                if let Some(sel) = self.players[p].selected {
                    if self.index_of(sel).is_none() {
                        self.players[p].selected = None;
                    }
                }
            }
        }
        for p in &mut self.players {
            p.alive = false;
        }
        for e in &self.entities {
            if self.rules.get(e.archetype).is_unit() {
                self.players[e.owner].alive = true;
            }
        }
        let cap = self.config.resource_cap;
        for p in &mut self.players {
            let r = &mut p.resources;
            r.gold = r.gold.clamp(0, cap);
            r.lumber = r.lumber.clamp(0, cap);
            r.oil = r.oil.clamp(0, cap);
        }
        if self.config.fog_of_war {
            self.refresh_vision();
        }
        self.terminal = self.is_terminal();
    }

    /// Terminal outcome of the current state, if any.
    pub fn is_terminal(&self) -> Option<Outcome> {
        if self.terminal.is_some() {
            return self.terminal;
        }
        let solo = self.players.len() == 1;
        if !solo {
            let mut alive = self.players.iter().enumerate().filter(|(_, p)| p.alive);
            match (alive.next(), alive.next()) {
                (None, _) => return Some(Outcome { winner: None }),
                (Some((winner, _)), None) => return Some(Outcome { winner: Some(winner) }),
                _ => {}
            }
        }
        let episode_over = self.episode_ticks.is_some_and(|ep| self.tick >= ep);
        if episode_over || self.tick >= self.config.tick_limit {
            return Some(Outcome { winner: None });
        }
        None
    }

    fn update_entity(&mut self, i: usize) {
        if self.entities[i].state == EntityState::Combat {
            let target_alive = match self.entities[i].target {
                Some(Target::Entity(t)) => self.live_entity(t).is_some(),
                _ => false,
            };
            if !target_alive {
                self.become_idle(i);
                return;
            }
        }
        let Some(timer) = self.entities[i].timer.as_mut() else { return };
        timer.remaining = timer.remaining.saturating_sub(1);
        if timer.remaining > 0 {
            return;
        }
        match self.entities[i].state {
            EntityState::Spawning => self.complete_spawn(i),
            EntityState::Walking => self.walk_step(i),
            EntityState::Harvesting => self.harvest_cycle(i),
            EntityState::Combat => self.attack_cycle(i),
            EntityState::Building | EntityState::Idle => self.become_idle(i),
            EntityState::Dead => {}
        }
    }

    fn become_idle(&mut self, i: usize) {
        let e = &mut self.entities[i];
        e.state = EntityState::Idle;
        e.timer = None;
        e.route.clear();
        e.goal = None;
        e.target = None;
    }

    fn complete_spawn(&mut self, i: usize) {
        let (owner, archetype) = (self.entities[i].owner, self.entities[i].archetype);
        let provided = self.rules.get(archetype).food_provided;
        self.become_idle(i);
        if self.rules.get(archetype).is_building() {
            let limit = self.config.food_limit;
            let p = &mut self.players[owner];
            p.food_supply += provided;
            p.refresh_food_cap(limit);
        }
    }

    fn restart_timer(&mut self, i: usize, total: u32) {
        self.entities[i].timer = Some(TickTimer::new(total));
    }

    fn walk_ticks_of(&self, i: usize) -> u32 {
        let speed = self.rules.get(self.entities[i].archetype).speed_cost.unwrap_or(1);
        self.config.walk_ticks(speed)
    }

    fn move_entity(&mut self, i: usize, to: Pos) {
        let id = self.entities[i].id;
        let from = self.entities[i].pos;
        self.map.tile_mut(from).occupant = None;
        self.map.tile_mut(to).occupant = Some(id);
        self.entities[i].pos = to;
    }

    /// One move step. A blocked step triggers a single re-plan toward the
    /// stored goal; failing that the unit gives up and idles.
    fn walk_step(&mut self, i: usize) {
        if let Some(&next) = self.entities[i].route.last() {
            if self.map.is_free(next) {
                self.entities[i].route.pop();
                self.move_entity(i, next);
            } else {
                let repaired = self.entities[i].goal.and_then(|g| self.plan_route(i, g));
                match repaired {
                    Some(path) if path.first().is_some_and(|&p| self.map.is_free(p)) => {
                        self.entities[i].set_path(path);
                        let step = self.entities[i].route.pop().expect("non-empty path");
                        self.move_entity(i, step);
                    }
                    _ => {
                        self.become_idle(i);
                        return;
                    }
                }
            }
        }
        self.after_step(i);
    }

    /// Decides what a walking unit does after arriving on a tile.
    fn after_step(&mut self, i: usize) {
        let pos = self.entities[i].pos;
        match self.entities[i].target {
            Some(Target::Entity(t)) => match self.live_entity(t).map(|e| e.pos) {
                Some(tp) if tp.chebyshev(pos) <= 1 => {
                    self.enter_combat(i, t);
                    return;
                }
                Some(tp) => {
                    if self.entities[i].route.is_empty() {
                        // Chase: the target moved since the route was planned.
                        self.entities[i].goal = Some(Goal::Near(tp));
                    }
                }
                None => {
                    self.become_idle(i);
                    return;
                }
            },
            Some(Target::Resource(tile)) => {
                if tile.chebyshev(pos) <= 1 && self.resource_at(tile).is_some() {
                    self.enter_harvest(i, tile);
                    return;
                }
            }
            None => {}
        }
        if self.entities[i].route.is_empty() {
            let goal = self.entities[i].goal.filter(|g| !g.reached(pos));
            let planned = match goal {
                Some(g) if !self.config.pathfinding_enabled => {
                    let view = MoverView { state: self, mover: self.entities[i].id };
                    self.greedy_step(&view, pos, g).map(|step| self.entities[i].route.push(step))
                }
                Some(g) => match self.plan_route(i, g) {
                    Some(path) if !path.is_empty() => Some(self.entities[i].set_path(path)),
                    _ => None,
                },
                None => None,
            };
            if planned.is_none() {
                self.become_idle(i);
                return;
            }
        }
        let total = self.walk_ticks_of(i);
        self.restart_timer(i, total);
    }

    fn enter_combat(&mut self, i: usize, target: EntityId) {
        let total = self.config.action_ticks();
        let e = &mut self.entities[i];
        e.state = EntityState::Combat;
        e.target = Some(Target::Entity(target));
        e.route.clear();
        e.goal = None;
        e.timer = Some(TickTimer::new(total));
    }

    fn enter_harvest(&mut self, i: usize, tile: Pos) {
        let total = self.config.action_ticks();
        let e = &mut self.entities[i];
        e.state = EntityState::Harvesting;
        e.target = Some(Target::Resource(tile));
        e.route.clear();
        e.goal = None;
        e.timer = Some(TickTimer::new(total));
    }

    fn start_walking(&mut self, i: usize, path: Vec<Pos>, goal: Goal, target: Option<Target>) {
        debug_assert!(!path.is_empty());
        let total = self.walk_ticks_of(i);
        let e = &mut self.entities[i];
        e.state = EntityState::Walking;
        e.set_path(path);
        e.goal = Some(goal);
        e.target = target;
        e.timer = Some(TickTimer::new(total));
    }

    fn resource_at(&self, tile: Pos) -> Option<(ResourceKind, i32)> {
        self.map
            .get(tile)
            .and_then(|t| t.resource)
            .filter(|r| r.amount > 0)
            .map(|r| (r.kind, r.amount))
    }

    /// Deposits one harvest yield. Resources clamp at the cap; the tile is
    /// depleted regardless.
    fn harvest_cycle(&mut self, i: usize) {
        let Some(Target::Resource(tile)) = self.entities[i].target else {
            self.become_idle(i);
            return;
        };
        let pos = self.entities[i].pos;
        let Some((kind, amount)) = self.resource_at(tile).filter(|_| tile.chebyshev(pos) <= 1) else {
            let kind = self.map.get(tile).and_then(|t| t.resource).map(|r| r.kind);
            self.resource_exhausted(i, kind);
            return;
        };
        let take = amount.min(self.rules.harvest_yield);
        let depleted = take == amount;
        {
            let t = self.map.tile_mut(tile);
            if depleted {
                t.resource = None;
            } else if let Some(r) = t.resource.as_mut() {
                r.amount -= take;
            }
        }
        let cap = self.config.resource_cap;
        let player = &mut self.players[self.entities[i].owner];
        let slot = match kind {
            ResourceKind::Gold => &mut player.resources.gold,
            ResourceKind::Lumber => &mut player.resources.lumber,
            ResourceKind::Oil => &mut player.resources.oil,
        };
        *slot = (*slot + take).min(cap);
        player.score += take as i64;
        player.harvested += take as i64;
        if depleted {
            self.resource_exhausted(i, Some(kind));
        } else {
            let total = self.config.action_ticks();
            self.restart_timer(i, total);
        }
    }

    fn resource_exhausted(&mut self, i: usize, kind: Option<ResourceKind>) {
        if let (true, Some(kind)) = (self.config.harvest_forever, kind) {
            if let Some((stand, tile, path)) = self.nearest_resource(i, kind) {
                if path.is_empty() {
                    self.enter_harvest(i, tile);
                } else {
                    self.start_walking(i, path, Goal::Tile(stand), Some(Target::Resource(tile)));
                }
                return;
            }
        }
        self.become_idle(i);
    }

    /// Nearest reachable stand tile next to a deposit of `kind`, by walking
    /// distance. Returns (stand tile, deposit tile, path to stand tile).
    fn nearest_resource(&self, i: usize, kind: ResourceKind) -> Option<(Pos, Pos, Vec<Pos>)> {
        let me = &self.entities[i];
        let deposit_near = |p: Pos| {
            p.neighbors().find(|&n| {
                self.map.get(n).and_then(|t| t.resource).is_some_and(|r| r.kind == kind && r.amount > 0)
            })
        };
        if !self.config.pathfinding_enabled {
            // No search: aim greedily at the closest deposit as the crow flies.
            let tile = self
                .map
                .positions()
                .filter(|&p| self.resource_at(p).is_some_and(|(k, _)| k == kind))
                .min_by_key(|&p| (p.chebyshev(me.pos), p.euclid_sq(me.pos), p.y, p.x))?;
            if tile.chebyshev(me.pos) <= 1 {
                return Some((me.pos, tile, Vec::new()));
            }
            let path = self.plan_route(i, Goal::Near(tile))?;
            let stand = *path.last()?;
            return Some((stand, tile, path));
        }
        let path = self.bfs_to(i, |p| deposit_near(p).is_some())?;
        let stand = path.last().copied().unwrap_or(me.pos);
        let tile = deposit_near(stand)?;
        Some((stand, tile, path))
    }

    /// Breadth-first search from the entity's tile to the closest tile
    /// satisfying `goal`, honouring occupancy. The path excludes the start
    /// and is empty when the start already qualifies.
    pub(crate) fn bfs_to(&self, i: usize, goal: impl Fn(Pos) -> bool) -> Option<Vec<Pos>> {
        let me = &self.entities[i];
        let view = MoverView { state: self, mover: me.id };
        let w = self.map.width();
        let idx = |p: Pos| (p.y * w + p.x) as usize;
        let mut parent = vec![u32::MAX; self.map.area()];
        parent[idx(me.pos)] = idx(me.pos) as u32;
        let mut queue = VecDeque::from([me.pos]);
        while let Some(cur) = queue.pop_front() {
            if goal(cur) {
                let mut path = Vec::new();
                let mut at = cur;
                while at != me.pos {
                    path.push(at);
                    at = self.map.pos_of(parent[idx(at)] as usize);
                }
                path.reverse();
                return Some(path);
            }
            for n in cur.neighbors() {
                if view.walkable(n) && parent[idx(n)] == u32::MAX {
                    parent[idx(n)] = idx(cur) as u32;
                    queue.push_back(n);
                }
            }
        }
        None
    }

    /// One attack: damage an adjacent target, or chase it when out of range.
    fn attack_cycle(&mut self, i: usize) {
        let Some(Target::Entity(target)) = self.entities[i].target else {
            self.become_idle(i);
            return;
        };
        let Some(t) = self.index_of(target).filter(|&t| self.entities[t].is_alive()) else {
            self.become_idle(i);
            return;
        };
        let (attacker, pos) = (self.entities[i].id, self.entities[i].pos);
        let target_pos = self.entities[t].pos;
        if pos.chebyshev(target_pos) > 1 {
            match self.plan_route(i, Goal::Near(target_pos)) {
                Some(path) if !path.is_empty() => {
                    self.start_walking(i, path, Goal::Near(target_pos), Some(Target::Entity(target)))
                }
                _ => self.become_idle(i),
            }
            return;
        }
        let damage = self.rules.get(self.entities[i].archetype).attack_damage;
        self.entities[t].hp -= damage;
        self.entities[t].last_attacker = Some(attacker);
        if self.entities[t].hp <= 0 {
            let killer = self.entities[i].owner;
            self.kill(t, Some(killer));
            self.become_idle(i);
            return;
        }
        if self.config.auto_attack {
            let next = self.evaluate_index(t);
            if next == EntityState::Combat && self.entities[t].state != EntityState::Combat {
                self.enter_combat(t, attacker);
            }
        }
        let total = self.config.action_ticks();
        self.restart_timer(i, total);
    }

    fn kill(&mut self, t: usize, killer: Option<usize>) {
        let (owner, archetype, pos, was_spawning) = {
            let e = &self.entities[t];
            (e.owner, e.archetype, e.pos, e.state == EntityState::Spawning)
        };
        {
            let e = &mut self.entities[t];
            e.state = EntityState::Dead;
            e.hp = e.hp.min(0);
            e.timer = None;
            e.route.clear();
            e.goal = None;
            e.target = None;
        }
        if self.map.tile(pos).occupant == Some(self.entities[t].id) {
            self.map.tile_mut(pos).occupant = None;
        }
        let kind = self.rules.get(archetype).clone();
        let limit = self.config.food_limit;
        let p = &mut self.players[owner];
        if kind.is_unit() {
            p.resources.unit_count -= 1;
            p.resources.food_used -= kind.food_cost;
        } else if !was_spawning {
            p.food_supply -= kind.food_provided;
        }
        p.refresh_food_cap(limit);
        if let Some(k) = killer {
            self.players[k].score += kind.max_hp as i64;
        }
    }

    /// Removes every entity of a player (disconnect forfeits).
    pub fn forfeit(&mut self, player: usize) -> Result<()> {
        if player >= self.players.len() {
            return Err(EngineError::PlayerOutOfRange(player));
        }
        if self.terminal.is_some() {
            return Ok(());
        }
        for t in 0..self.entities.len() {
            if self.entities[t].owner == player && self.entities[t].is_alive() {
                self.kill(t, None);
            }
        }
        self.end_of_tick_without_advance();
        Ok(())
    }

    fn end_of_tick_without_advance(&mut self) {
        self.end_of_tick();
    }

    /// Successor state of an entity under the transition rules, without
    /// applying it.
    pub fn evaluate_state_machine(&self, id: EntityId) -> Result<EntityState> {
        let i = self.index_of(id).ok_or(EngineError::UnknownEntity(id.0))?;
        Ok(self.evaluate_index(i))
    }

    fn evaluate_index(&self, i: usize) -> EntityState {
        let e = &self.entities[i];
        let archetype = self.rules.get(e.archetype);
        match e.state {
            EntityState::Dead => return EntityState::Dead,
            EntityState::Spawning => {
                return if e.timer.is_none_or(|t| t.remaining == 0) {
                    EntityState::Idle
                } else {
                    EntityState::Spawning
                };
            }
            _ => {}
        }
        if self.config.auto_attack && archetype.is_unit() && archetype.can_attack() {
            if let Some(attacker) = e.last_attacker.and_then(|a| self.live_entity(a)) {
                if attacker.owner != e.owner && e.state != EntityState::Combat {
                    return EntityState::Combat;
                }
            }
        }
        match e.state {
            EntityState::Walking if e.route.is_empty() => EntityState::Idle,
            EntityState::Harvesting => {
                let dry = match e.target {
                    Some(Target::Resource(tile)) => self.resource_at(tile).is_none(),
                    _ => true,
                };
                if !dry {
                    return EntityState::Harvesting;
                }
                let kind = match e.target {
                    Some(Target::Resource(tile)) => self.map.get(tile).and_then(|t| t.resource).map(|r| r.kind),
                    _ => None,
                }
                .unwrap_or(ResourceKind::Gold);
                match self.config.harvest_forever.then(|| self.nearest_resource(i, kind)).flatten() {
                    Some((_, _, path)) if path.is_empty() => EntityState::Harvesting,
                    Some(_) => EntityState::Walking,
                    None => EntityState::Idle,
                }
            }
            EntityState::Combat => match e.target {
                Some(Target::Entity(t)) if self.live_entity(t).is_some() => EntityState::Combat,
                _ => EntityState::Idle,
            },
            s => s,
        }
    }

    /// Route from the entity's tile toward `goal`, excluding the start tile.
    /// With path-finding disabled this is a single greedy step.
    pub(crate) fn plan_route(&self, i: usize, goal: Goal) -> Option<Vec<Pos>> {
        let me = &self.entities[i];
        if goal.reached(me.pos) {
            return Some(Vec::new());
        }
        let view = MoverView { state: self, mover: me.id };
        if !self.config.pathfinding_enabled {
            return self.greedy_step(&view, me.pos, goal).map(|p| vec![p]);
        }
        let search = |to: Pos| {
            let q = PathQuery::new(&view, me.pos, to);
            let found = match self.config.pathfinder {
                PathAlgorithm::Jps => search_jps(q),
                PathAlgorithm::Bfs => search_bfs(q),
            };
            found.ok().and_then(|o| o.path)
        };
        match goal {
            Goal::Tile(p) => search(p),
            Goal::Near(anchor) => {
                let mut candidates: Vec<Pos> =
                    anchor.neighbors().filter(|&n| view.walkable(n)).collect();
                candidates.sort_by_key(|&n| (n.chebyshev(me.pos), n.euclid_sq(me.pos)));
                candidates.into_iter().find_map(search)
            }
        }
    }

    fn greedy_step(&self, view: &MoverView<'_>, from: Pos, goal: Goal) -> Option<Pos> {
        let anchor = goal.anchor();
        let score = |p: Pos| (p.chebyshev(anchor), p.euclid_sq(anchor));
        let current = score(from);
        NEIGHBOR_OFFSETS
            .iter()
            .map(|&(dx, dy)| from.offset(dx, dy))
            .filter(|&n| view.walkable(n) && (goal.reached(n) || score(n) < current))
            .min_by_key(|&n| (!goal.reached(n), score(n)))
    }

    /// Routed move order ("right-click on a tile"). Returns whether the unit
    /// started moving.
    pub fn order_move(&mut self, id: EntityId, dest: Pos) -> Result<bool> {
        let i = self.index_of(id).ok_or(EngineError::UnknownEntity(id.0))?;
        self.map.check_bounds(dest)?;
        let e = &self.entities[i];
        if !e.is_alive() || e.state == EntityState::Spawning || self.rules.get(e.archetype).speed_cost.is_none() {
            return Ok(false);
        }
        match self.plan_route(i, Goal::Tile(dest)) {
            Some(path) if !path.is_empty() => {
                self.start_walking(i, path, Goal::Tile(dest), None);
                Ok(true)
            }
            _ => Ok(false),
        }
    }

    pub(crate) fn free_neighbor(&self, p: Pos) -> Option<Pos> {
        p.neighbors().find(|&n| self.map.is_free(n))
    }

    fn can_afford(&self, player: usize, archetype: ArchetypeId) -> bool {
        let a = self.rules.get(archetype);
        let r = &self.players[player].resources;
        r.gold >= a.gold_cost && r.lumber >= a.lumber_cost
    }

    /// Works out what `action` would do for `player`, or `None` when it
    /// resolves to a no-op.
    pub(crate) fn plan_primitive(&self, player: usize, action: PrimitiveAction) -> Option<Effect> {
        if action == PrimitiveAction::NoAction {
            return Some(Effect::Nothing);
        }
        if self.terminal.is_some() || !self.players[player].alive {
            return None;
        }
        let selected = self.players[player].selected.and_then(|id| self.live_entity(id));
        match action {
            PrimitiveAction::NextUnit | PrimitiveAction::PrevUnit => {
                let owned: Vec<EntityId> = self.entities_of(player).map(|e| e.id).collect();
                let next = match (selected.map(|e| e.id), action) {
                    (None, _) => *owned.first()?,
                    (Some(cur), PrimitiveAction::NextUnit) => {
                        *owned.iter().find(|&&id| id > cur).or(owned.first())?
                    }
                    (Some(cur), _) => *owned.iter().rev().find(|&&id| id < cur).or(owned.last())?,
                };
                (Some(next) != selected.map(|e| e.id)).then_some(Effect::Select(next))
            }
            _ => {
                let unit = selected?;
                if matches!(unit.state, EntityState::Spawning | EntityState::Building) {
                    return None;
                }
                let archetype = self.rules.get(unit.archetype);
                if let Some((dx, dy)) = action.direction() {
                    let to = unit.pos.offset(dx, dy);
                    return (archetype.speed_cost.is_some() && self.map.is_free(to))
                        .then_some(Effect::Move { unit: unit.id, to });
                }
                match action {
                    PrimitiveAction::Attack => {
                        if !archetype.can_attack() {
                            return None;
                        }
                        unit.pos
                            .neighbors()
                            .filter_map(|n| self.entity_at(n))
                            .filter(|e| e.owner != player)
                            .map(|e| e.id)
                            .min()
                            .map(|target| Effect::Attack { unit: unit.id, target })
                    }
                    PrimitiveAction::Harvest => {
                        if unit.archetype != self.rules.worker() {
                            return None;
                        }
                        unit.pos
                            .neighbors()
                            .find(|&n| self.resource_at(n).is_some())
                            .map(|tile| Effect::Harvest { unit: unit.id, tile })
                    }
                    PrimitiveAction::Build0 | PrimitiveAction::Build1 | PrimitiveAction::Build2 => {
                        let slot = action.build_slot().expect("build action");
                        let made = *self.rules.builds(unit.archetype).get(slot)?;
                        if !self.can_afford(player, made) {
                            return None;
                        }
                        let at = self.free_neighbor(unit.pos)?;
                        let made_kind = self.rules.get(made);
                        if archetype.is_unit() && made_kind.is_building() {
                            Some(Effect::Construct { builder: unit.id, archetype: made, at })
                        } else if archetype.is_building() && made_kind.is_unit() {
                            let r = &self.players[player].resources;
                            let food_ok = r.food_used + made_kind.food_cost <= r.food_cap;
                            let units_ok = r.unit_count < self.config.unit_limit;
                            (food_ok && units_ok).then_some(Effect::Train {
                                building: unit.id,
                                archetype: made,
                                at,
                            })
                        } else {
                            None
                        }
                    }
                    _ => None,
                }
            }
        }
    }

    /// Routes a primitive action to the player's selected entity. Illegal
    /// actions are no-ops reported through `ActionOutcome::ignored`.
    pub fn apply_primitive_action(&mut self, player: usize, action: PrimitiveAction) -> Result<ActionOutcome> {
        if player >= self.players.len() {
            return Err(EngineError::PlayerOutOfRange(player));
        }
        let Some(effect) = self.plan_primitive(player, action) else {
            return Ok(ActionOutcome { ignored: true });
        };
        match effect {
            Effect::Nothing => {}
            Effect::Select(id) => self.players[player].selected = Some(id),
            Effect::Move { unit, to } => {
                let i = self.index_of(unit).expect("planned unit exists");
                self.start_walking(i, vec![to], Goal::Tile(to), None);
            }
            Effect::Attack { unit, target } => {
                let i = self.index_of(unit).expect("planned unit exists");
                self.enter_combat(i, target);
            }
            Effect::Harvest { unit, tile } => {
                let i = self.index_of(unit).expect("planned unit exists");
                self.enter_harvest(i, tile);
            }
            Effect::Construct { builder, archetype, at } => {
                self.pay(player, archetype);
                self.spawn_entity(player, archetype, at, EntityState::Spawning)?;
                let total = self.config.build_ticks();
                let i = self.index_of(builder).expect("planned builder exists");
                let e = &mut self.entities[i];
                e.state = EntityState::Building;
                e.route.clear();
                e.goal = None;
                e.target = None;
                e.timer = Some(TickTimer::new(total));
            }
            Effect::Train { building: _, archetype, at } => {
                self.pay(player, archetype);
                self.spawn_entity(player, archetype, at, EntityState::Spawning)?;
            }
        }
        Ok(ActionOutcome { ignored: false })
    }

    fn pay(&mut self, player: usize, archetype: ArchetypeId) {
        let a = self.rules.get(archetype);
        let (gold, lumber, score) = (a.gold_cost, a.lumber_cost, (a.gold_cost / 10) as i64);
        let p = &mut self.players[player];
        p.resources.gold -= gold;
        p.resources.lumber -= lumber;
        p.score += score;
    }

    pub(crate) fn refresh_vision(&mut self) {
        if !self.config.fog_of_war {
            self.vision.clear();
            return;
        }
        let mut vision = std::mem::take(&mut self.vision);
        vision.resize_with(self.players.len(), Vec::new);
        for (player, grid) in vision.iter_mut().enumerate() {
            self.vision_into(player, grid);
        }
        self.vision = vision;
    }

    /// Per-tile remaining sight for `player`: vision radius + 1 minus the
    /// Chebyshev distance to the best friendly entity, floored at 0.
    ///
    /// Computed as a two-pass 8-neighbour distance transform seeded at the
    /// player's entities, so the cost is linear in the tile count and
    /// independent of unit count and sight radius.
    fn vision_into(&self, player: usize, grid: &mut Vec<u8>) {
        let (w, h) = (self.map.width() as usize, self.map.height() as usize);
        grid.clear();
        grid.resize(w * h, 0);
        for e in self.entities_of(player) {
            let r = self.rules.get(e.archetype).vision_radius.clamp(0, 253) as u8 + 1;
            let cell = &mut grid[e.pos.y as usize * w + e.pos.x as usize];
            *cell = (*cell).max(r);
        }
        for y in 0..h {
            for x in 0..w {
                let mut best = grid[y * w + x];
                if x > 0 {
                    best = best.max(grid[y * w + x - 1].saturating_sub(1));
                }
                if y > 0 {
                    let up = (y - 1) * w;
                    best = best.max(grid[up + x].saturating_sub(1));
                    if x > 0 {
                        best = best.max(grid[up + x - 1].saturating_sub(1));
                    }
                    if x + 1 < w {
                        best = best.max(grid[up + x + 1].saturating_sub(1));
                    }
                }
                grid[y * w + x] = best;
            }
        }
        for y in (0..h).rev() {
            for x in (0..w).rev() {
                let mut best = grid[y * w + x];
                if x + 1 < w {
                    best = best.max(grid[y * w + x + 1].saturating_sub(1));
                }
                if y + 1 < h {
                    let down = (y + 1) * w;
                    best = best.max(grid[down + x].saturating_sub(1));
                    if x > 0 {
                        best = best.max(grid[down + x - 1].saturating_sub(1));
                    }
                    if x + 1 < w {
                        best = best.max(grid[down + x + 1].saturating_sub(1));
                    }
                }
                grid[y * w + x] = best;
            }
        }
    }

    /// Tiles the player can see: a row-major mask, true where visible.
    pub fn visibility(&self, player: usize) -> Vec<bool> {
        if let Some(v) = self.vision.get(player) {
            return v.iter().map(|&c| c > 0).collect();
        }
        let mut grid = Vec::new();
        if player < self.players.len() {
            self.vision_into(player, &mut grid);
        } else {
            grid.resize(self.map.area(), 0);
        }
        grid.into_iter().map(|c| c > 0).collect()
    }

    /// Whether `player` can currently see `p` (always true without fog).
    pub fn can_see(&self, player: usize, p: Pos) -> bool {
        if !self.config.fog_of_war {
            return true;
        }
        self.vision
            .get(player)
            .is_some_and(|v| v[self.map.index(p)] > 0)
    }
}
