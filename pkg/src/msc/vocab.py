"""High-level action vocabulary and per-race unit/tech tables.

The label space for one race is ``[null action] + race action list``: label 0 is
always "do nothing", label ``1 + action.id`` is the race's action with that id.
Action ids are dense 0-based indices into the race list, so ``n_a = 1 + len(list)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

RACES = ("Terran", "Protoss", "Zerg")

# Action groups that belong to the high-level action set; anything else ("Other")
# never becomes a label.
LABELED_GROUPS = frozenset(
    {"Build", "Train", "Research", "Morph", "Cancel", "Halt", "Stop"}
)

NULL_LABEL = 0

# Shared (race-independent) id spaces.
N_UNIT_TYPES = 24
N_TECHS = 4
N_UPGRADES = 4
N_ALERTS = 4

ALERT_NAMES = ("UnderAttack", "UnitLost", "ResearchComplete", "UpgradeComplete")


@dataclass(frozen=True)
class Action:
    id: int
    name: str
    group: str
    # Unit type produced by Build/Train/Morph actions; None for the rest.
    unit_type: int | None = None
    # Tech id granted by Research actions; None for the rest.
    tech_id: int | None = None


@dataclass(frozen=True)
class UnitType:
    id: int
    name: str
    is_building: bool
    # Harvesting structures feed the spatial resource-density channel.
    is_harvester: bool = False


def _units(names_buildings: list[tuple[str, bool, bool]]) -> tuple[UnitType, ...]:
    return tuple(
        UnitType(i, name, building, harv)
        for i, (name, building, harv) in enumerate(names_buildings)
    )


# 24 unit types per race: ids 0-9 buildings, 10-21 mobile units, 22-23 morph targets.
TERRAN_UNITS = _units([
    ("CommandCenter", True, True), ("SupplyDepot", True, False),
    ("Refinery", True, True), ("Barracks", True, False),
    ("Factory", True, False), ("Starport", True, False),
    ("EngineeringBay", True, False), ("Armory", True, False),
    ("Bunker", True, False), ("MissileTurret", True, False),
    ("SCV", False, False), ("Marine", False, False),
    ("Marauder", False, False), ("Reaper", False, False),
    ("Hellion", False, False), ("SiegeTank", False, False),
    ("Medivac", False, False), ("Viking", False, False),
    ("Raven", False, False), ("Banshee", False, False),
    ("Thor", False, False), ("Ghost", False, False),
    ("OrbitalCommand", True, True), ("PlanetaryFortress", True, True),
])

PROTOSS_UNITS = _units([
    ("Nexus", True, True), ("Pylon", True, False),
    ("Assimilator", True, True), ("Gateway", True, False),
    ("CyberneticsCore", True, False), ("RoboticsFacility", True, False),
    ("Stargate", True, False), ("Forge", True, False),
    ("TwilightCouncil", True, False), ("PhotonCannon", True, False),
    ("Probe", False, False), ("Zealot", False, False),
    ("Stalker", False, False), ("Sentry", False, False),
    ("Adept", False, False), ("Immortal", False, False),
    ("Colossus", False, False), ("Phoenix", False, False),
    ("VoidRay", False, False), ("HighTemplar", False, False),
    ("DarkTemplar", False, False), ("Observer", False, False),
    ("WarpGate", True, False), ("MothershipCore", False, False),
])

ZERG_UNITS = _units([
    ("Hatchery", True, True), ("SpawningPool", True, False),
    ("Extractor", True, True), ("RoachWarren", True, False),
    ("BanelingNest", True, False), ("EvolutionChamber", True, False),
    ("HydraliskDen", True, False), ("Spire", True, False),
    ("SpineCrawler", True, False), ("SporeCrawler", True, False),
    ("Drone", False, False), ("Zergling", False, False),
    ("Roach", False, False), ("Baneling", False, False),
    ("Hydralisk", False, False), ("Mutalisk", False, False),
    ("Overlord", False, False), ("Queen", False, False),
    ("Corruptor", False, False), ("Infestor", False, False),
    ("Ultralisk", False, False), ("SwarmHost", False, False),
    ("Lair", True, True), ("Hive", True, True),
])

UNIT_TABLE: dict[str, tuple[UnitType, ...]] = {
    "Terran": TERRAN_UNITS,
    "Protoss": PROTOSS_UNITS,
    "Zerg": ZERG_UNITS,
}

TECH_NAMES: dict[str, tuple[str, ...]] = {
    "Terran": ("Stimpack", "CombatShield", "InfernalPreigniter", "CloakingField"),
    "Protoss": ("WarpGateResearch", "Blink", "Charge", "PsiStorm"),
    "Zerg": ("MetabolicBoost", "GlialReconstitution", "GroovedSpines", "Burrow"),
}


def _race_actions(race: str) -> tuple[Action, ...]:
    units = UNIT_TABLE[race]
    techs = TECH_NAMES[race]
    actions: list[Action] = []

    def add(name: str, group: str, unit_type: int | None = None,
            tech_id: int | None = None) -> None:
        actions.append(Action(len(actions), name, group, unit_type, tech_id))

    for u in units[:10]:
        add(f"Build_{u.name}", "Build", unit_type=u.id)
    for u in units[10:22]:
        add(f"Train_{u.name}", "Train", unit_type=u.id)
    for tid, tname in enumerate(techs):
        add(f"Research_{tname}", "Research", tech_id=tid)
    for u in units[22:24]:
        add(f"Morph_{u.name}", "Morph", unit_type=u.id)
    add("Cancel_Production", "Cancel")
    add("Halt_Construction", "Halt")
    add("Stop_Unit", "Stop")
    return tuple(actions)


class ActionVocabulary:
    """Per-race ordered action lists plus the distinguished null action at label 0."""

    def __init__(self, per_race: dict[str, tuple[Action, ...]]):
        for race in RACES:
            if race not in per_race:
                raise ValueError(f"vocabulary missing race {race!r}")
        for race, actions in per_race.items():
            ids = [a.id for a in actions]
            if ids != list(range(len(actions))):
                raise ValueError(f"{race} action ids must be dense 0..n-1, got {ids}")
        self.per_race = dict(per_race)

    def actions(self, race: str) -> tuple[Action, ...]:
        return self.per_race[race]

    def n_a(self, race: str) -> int:
        return 1 + len(self.per_race[race])

    def label_of(self, race: str, action_id: int) -> int:
        """Label index of a race action id; unknown ids map to the null label."""
        if 0 <= action_id < len(self.per_race[race]):
            return 1 + action_id
        return NULL_LABEL

    def action_of_label(self, race: str, label: int) -> Action | None:
        if label == NULL_LABEL:
            return None
        return self.per_race[race][label - 1]

    def to_json_dict(self) -> dict:
        return {
            race.lower(): [
                {"id": a.id, "name": a.name, "group": a.group,
                 "unit_type": a.unit_type, "tech_id": a.tech_id}
                for a in self.per_race[race]
            ]
            for race in RACES
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ActionVocabulary":
        raw = json.loads(Path(path).read_text())
        per_race = {}
        for race in RACES:
            rows = raw[race.lower()]
            per_race[race] = tuple(
                Action(r["id"], r["name"], r["group"],
                       r.get("unit_type"), r.get("tech_id"))
                for r in rows
            )
        return cls(per_race)


def default_vocabulary() -> ActionVocabulary:
    return ActionVocabulary({race: _race_actions(race) for race in RACES})
