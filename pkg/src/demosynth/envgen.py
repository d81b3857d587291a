"""Synthetic household environments at three sizes.

The catalog of types and descriptive properties is made up; only the
overall magnitudes (object types, instances, property facts) are targeted.
Rooms r1 and r2 reproduce the two-bedroom setup of the motivating task, and
a kitchen, bedroom and a few other places carry the entities the benchmark
tasks need.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .envmodel import DEFAULT_PROPERTIES, DEFAULT_RELATIONS, Environment, Vocabulary, default_actions, make_env


@dataclass(frozen=True)
class Scale:
    object_types: int
    instances: int
    facts: int
    locations: int


SCALES = {
    "easy": Scale(40, 140, 609, 7),
    "medium": Scale(60, 295, 2455, 10),
    "hard": Scale(80, 1109, 13944, 16),
}

LOCATION_TYPES = ("room", "kitchen", "bedroom", "living-room", "bathroom", "hallway", "garage", "office")

# types the benchmark tasks rely on; their placement is fixed
TASK_TYPES = ("bed", "sheet", "bin", "pillow", "chair", "mug", "door", "lamp", "bottle", "plate",
              "dishwasher", "fridge", "fruit", "counter", "trash-can", "drawer", "cloth")

FILLER_TYPES = (
    "book", "cup", "towel", "shelf", "table", "sofa", "rug", "vase", "clock", "plant", "toy", "shoe",
    "basket", "bowl", "spoon", "fork", "knife", "pan", "pot", "kettle", "sponge", "soap", "mirror", "sink",
    "tv", "remote", "laptop", "phone", "pen", "paper", "box", "bag", "hat", "coat", "blanket", "candle",
    "frame", "speaker", "fan", "heater", "broom", "bucket", "mop", "brush", "jar", "lid", "tray", "napkin",
    "glass", "kettlebell", "stool", "desk", "cabinet", "curtain", "window", "toaster", "oven", "microwave",
    "cushion", "magazine", "charger", "tablet", "printer", "scanner", "keyboard", "mouse", "monitor",
)

DESCRIPTIVE_PROPERTIES = (
    "red", "blue", "green", "white", "black", "wooden", "metal", "plastic", "glass-made", "heavy", "light",
    "small", "large", "new", "old", "wet", "dry", "fragile", "soft", "hard", "round", "square", "striped",
    "shiny", "dusty",
)


def _vocabulary(scale: Scale) -> Vocabulary:
    n_loc = 6 if scale.locations < 10 else len(LOCATION_TYPES)
    obj_types = TASK_TYPES + FILLER_TYPES[:scale.object_types - len(TASK_TYPES)]
    return Vocabulary(LOCATION_TYPES[:n_loc], obj_types, DEFAULT_PROPERTIES + DESCRIPTIVE_PROPERTIES,
                      DEFAULT_RELATIONS, default_actions())


def _jitter(rng: random.Random, n: int) -> int:
    return max(1, round(n * rng.uniform(0.95, 1.05)))


def generate_env(scale: str = "easy", seed: int = 0) -> Environment:
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}; expected one of {sorted(SCALES)}")
    sc = SCALES[scale]
    rng = random.Random(f"{scale}:{seed}")
    vocab = _vocabulary(sc)

    locations = [("r1", "room"), ("r2", "room"), ("kitchen1", "kitchen"), ("bedroom1", "bedroom"),
                 ("living1", "living-room"), ("bath1", "bathroom"), ("hall1", "hallway")]
    extra_types = [t for t in vocab.location_types if t != "room"]
    i = 2
    while len(locations) < sc.locations:
        t = extra_types[(len(locations) - 2) % len(extra_types)]
        locations.append((f"{t.split('-')[0]}{i}", t))
        i += 1

    objects: list = []
    props: set = set()
    rels: set = set()
    counter: dict = {}

    def add(t: str, loc: str, *ps: str) -> str:
        counter[t] = counter.get(t, 0) + 1
        oid = f"{t}{counter[t]}"
        objects.append((oid, t, loc))
        for p in ps:
            props.add((p, oid))
        return oid

    # the two bedrooms of the motivating task
    b1 = add("bed", "r1")
    s1 = add("sheet", "r1", "dirty")
    s2 = add("sheet", "r1", "clean")
    add("bin", "r1", "closed", "empty")
    p1 = add("pillow", "r1", "clean")
    add("mug", "r1", "empty")
    b2 = add("bed", "r2")
    s3 = add("sheet", "r2", "dirty")
    s4 = add("sheet", "r2", "dirty")
    add("bin", "r2", "closed", "empty")
    add("chair", "r2")
    for s, b in ((s1, b1), (s2, b1), (p1, b1), (s3, b2), (s4, b2)):
        rels.add(("on-top-of", s, b))
    for r in ("r1", "r2"):
        add("door", r, "opened")
        add("lamp", r, "on")
        add("lamp", r, "on")
        add("bottle", r, "empty")
        add("bottle", r, "empty")

    # kitchen and bedroom fixtures
    add("counter", "kitchen1")
    fridge = add("fridge", "kitchen1", "closed")
    for _ in range(3):
        f = add("fruit", "kitchen1", rng.choice(("red", "green")))
        rels.add(("inside-of", f, fridge))
    add("dishwasher", "kitchen1", "closed", "empty")
    add("trash-can", "kitchen1", "closed", "empty")
    add("plate", "kitchen1", "dirty")
    add("plate", "kitchen1", "clean")
    add("plate", "kitchen1", "dirty")
    add("drawer", "bedroom1", "closed", "empty")
    add("cloth", "bedroom1")
    add("cloth", "bedroom1")

    # task types stay where the tasks expect them; everything else is filler
    filler_types = [t for t in vocab.object_types if t not in TASK_TYPES]
    filler_locs = [l for l, t in locations if t != "room" and l != "kitchen1" and l != "bedroom1"]
    target = _jitter(rng, sc.instances)
    ft = 0
    while len(objects) < target:
        t = filler_types[ft % len(filler_types)]
        ft += 1
        add(t, rng.choice(filler_locs))

    # descriptive properties until the fact target is met
    target_facts = _jitter(rng, sc.facts)
    ids = [o for o, _, _ in objects]
    fixed = {o for o, t, _ in objects if t in TASK_TYPES}
    free = [o for o in ids if o not in fixed]
    while len(props) < target_facts:
        props.add((rng.choice(DESCRIPTIVE_PROPERTIES), rng.choice(free)))

    # a few spatial relations among filler objects sharing a location
    by_loc: dict = {}
    for o, t, l in objects:
        if o not in fixed:
            by_loc.setdefault(l, []).append(o)
    for l in sorted(by_loc):
        group = by_loc[l]
        for _ in range(len(group) // 4):
            a, b = rng.sample(group, 2)
            rels.add((rng.choice(("next-to", "on-top-of")), a, b))

    return make_env(vocab, locations, objects, "r1", sorted(props), sorted(rels))


def env_stats(env: Environment) -> dict:
    return {"objectTypes": len(env.vocab.object_types), "instances": len(env.objects),
            "propertyFacts": len(env.props), "relationFacts": len(env.rels), "locations": len(env.locations)}


def perturb_env(env: Environment, seed: int) -> Environment:
    """A variant with extra clean sheets in existing rooms and extra furnished rooms.

    New rooms get a bed, a closed empty bin and a mix of dirty and clean
    sheets on the bed, so any policy for the sheet task still applies.
    Needs `room`, `bed`, `sheet` and `bin` in the vocabulary.
    """
    rng = random.Random(f"perturb:{seed}")
    locations = list(env.locations)
    objects = list(env.objects)
    props = set(env.props)
    rels = set(env.rels)
    taken = {l for l, _ in locations} | {o for o, _, _ in objects}

    def fresh(prefix: str) -> str:
        i = 1
        while f"{prefix}{i}" in taken:
            i += 1
        taken.add(f"{prefix}{i}")
        return f"{prefix}{i}"

    def add(t: str, loc: str, *ps: str) -> str:
        oid = fresh(f"x{t}")
        objects.append((oid, t, loc))
        props.update((p, oid) for p in ps)
        return oid

    rooms = [l for l, t in locations if t == "room"]
    beds = {l: [o for o, t, ol in objects if t == "bed" and ol == l] for l in rooms}
    for _ in range(rng.randint(1, 3)):
        room = rng.choice(rooms)
        s = add("sheet", room, "clean")
        if beds[room] and rng.random() < 0.7:
            rels.add(("on-top-of", s, rng.choice(beds[room])))
    for _ in range(rng.randint(1, 2)):
        room = fresh("room")
        locations.append((room, "room"))
        bed = add("bed", room)
        add("bin", room, "closed", "empty")
        for _ in range(rng.randint(1, 3)):
            s = add("sheet", room, rng.choice(("dirty", "clean")))
            rels.add(("on-top-of", s, bed))
    return make_env(env.vocab, locations, objects, env.current_loc, sorted(props), sorted(rels))
