#!/usr/bin/env python3
"""Regenerate the bundled instance sets under crates/core/data/<domain>/instances.json.

Every domain is re-implemented here from scratch (no shared code with the Rust
crate) so the optimal lengths and solvability flags this script prints can be
frozen into the Rust test-suite as independent fixtures.

Usage: python3 scripts/gen_instances.py [--write]
Without --write the script only prints the summary table.
"""
import itertools
import json
import random
import string
import sys
from collections import deque
from fractions import Fraction
from pathlib import Path

DATA = Path(__file__).resolve().parent.parent / "crates" / "core" / "data"


def instance(domain, iid, initial, ctx=None, goal_ctx=None, known_answer=None):
    return {
        "domain": domain,
        "id": iid,
        "initial": initial,
        "ctx": ctx,
        "goal_ctx": goal_ctx,
        "known_answer": known_answer,
    }


def bfs_len(start, succ, goal, key, budget=2_000_000):
    seen = {key(start)}
    q = deque([(start, 0)])
    while q:
        s, d = q.popleft()
        if goal(s):
            return d
        for t in succ(s):
            k = key(t)
            if k not in seen:
                seen.add(k)
                if len(seen) > budget:
                    raise RuntimeError("budget")
                q.append((t, d + 1))
    return None


# ---------------------------------------------------------------- 24 game
def solvable24(nums):
    nums = [Fraction(n) for n in nums]

    def rec(xs):
        if len(xs) == 1:
            return xs[0] == 24
        for i, j in itertools.combinations(range(len(xs)), 2):
            a, b = xs[i], xs[j]
            rest = [xs[k] for k in range(len(xs)) if k not in (i, j)]
            outs = {a + b, a - b, b - a, a * b}
            if b != 0:
                outs.add(a / b)
            if a != 0:
                outs.add(b / a)
            for o in outs:
                if rec(rest + [o]):
                    return True
        return False

    return rec(nums)


UNIT_24 = [
    [1, 1, 4, 6], [1, 1, 11, 11], [1, 1, 3, 8], [1, 1, 1, 8], [6, 6, 6, 6],
    [1, 1, 2, 12], [1, 2, 2, 6], [1, 1, 10, 12], [2, 2, 10, 10], [1, 1, 1, 12],
]


def gen_game24(rng):
    soundness = [instance("game24", f"g24-unit-{i + 1:02d}", s) for i, s in enumerate(UNIT_24)]
    pool = [
        list(c)
        for c in itertools.combinations_with_replacement(range(1, 14), 4)
        if list(c) not in UNIT_24 and solvable24(c)
    ]
    picked = sorted(rng.sample(pool, 50))
    evals = [instance("game24", f"g24-{i + 1:03d}", s) for i, s in enumerate(picked)]
    return soundness, evals, {}


# ---------------------------------------------------------------- blocksworld
def bw_state(towers, holding=None):
    on = []
    for t in towers:
        for lower, upper in zip(t, t[1:]):
            on.append([upper, lower])
    return {
        "clear": [t[-1] for t in towers],
        "on-table": [t[0] for t in towers],
        "arm-empty": holding is None,
        "holding": holding,
        "on": on,
    }


def bw_succ(s):
    out = []
    clear, table, on = set(s["clear"]), set(s["on-table"]), {tuple(p) for p in s["on"]}
    h = s["holding"]

    def mk(clear, table, on, h):
        return {
            "clear": sorted(clear),
            "on-table": sorted(table),
            "arm-empty": h is None,
            "holding": h,
            "on": sorted(list(p) for p in on),
        }

    if h is None:
        for b in clear & table:
            out.append(mk(clear - {b}, table - {b}, on, b))
        for (x, y) in on:
            if x in clear:
                out.append(mk((clear - {x}) | {y}, table, on - {(x, y)}, x))
    else:
        out.append(mk(clear | {h}, table | {h}, on, None))
        for y in clear:
            out.append(mk((clear - {y}) | {h}, table, on | {(h, y)}, None))
    return out


def bw_key(s):
    return (
        tuple(sorted(s["clear"])),
        tuple(sorted(s["on-table"])),
        s["holding"],
        tuple(sorted(tuple(p) for p in s["on"])),
    )


def random_towers(blocks, rng):
    blocks = blocks[:]
    rng.shuffle(blocks)
    towers = []
    for b in blocks:
        if towers and rng.random() < 0.55:
            rng.choice(towers).append(b)
        else:
            towers.append([b])
    return towers


def gen_blocks(rng):
    def make(iid, n):
        blocks = list(string.ascii_lowercase[:n])
        while True:
            init = bw_state(random_towers(blocks, rng))
            goal_towers = random_towers(blocks, rng)
            goal_on = bw_state(goal_towers)["on"]
            if not goal_on:
                continue
            goal = {"clear": [], "on-table": [], "on": goal_on}
            if all(tuple(p) in {tuple(q) for q in init["on"]} for p in goal_on):
                continue
            return instance("blocksworld", iid, init, None, goal)

    def is_goal(g):
        pairs = {tuple(p) for p in g["on"]}
        return lambda s: pairs <= {tuple(p) for p in s["on"]}

    soundness = [make(f"bw-unit-{i + 1:02d}", n) for i, n in enumerate([3, 4, 4])]
    sizes = [3, 3, 3, 4, 4, 4, 4, 5, 5, 5, 5, 5, 6, 6, 6, 6, 6, 6, 4, 5]
    evals = [make(f"bw-small-{i + 1:02d}", n) for i, n in enumerate(sizes)]
    lengths = {}
    for inst in soundness + evals:
        lengths[inst["id"]] = bfs_len(inst["initial"], bw_succ, is_goal(inst["goal_ctx"]), bw_key)
    return soundness, evals, lengths


# ---------------------------------------------------------------- crossword
UNIT_TEST_CW = [
    {
        "grid": ["agend", "motor", "artsy", "salle", "sleer"],
        "h": [["tasks", "goals", "plans", "agend", "chores", "works", "deeds", "items", "lists", "brief"], ["motor", "power", "drive", "diesel", "steam", "pumps", "crank", "gears", "turbn", "motor"], ["grand", "artsy", "showy", "ornate", "fancy", "vain", "proud", "vogue", "swank", "luxus"], ["venue", "salle", "forum", "atria", "lobby", "parls", "court", "malls", "mall", "lobby"], ["jeer", "scoff", "sleer", "deris", "sneer", "scorn", "derid", "gibes", "gibed", "flout"]],
        "v": [["amass", "stack", "hoard", "pile", "store", "heaps", "massy", "gathe", "lumps", "mound"], ["nilga", "goral", "eland", "lepus", "gazal", "kudu", "oryx", "gnu", "imps", "carb"], ["scheme", "design", "ettle", "nettle", "sting", "wiles", "plans", "ideas", "plots", "cocks"], ["spout", "nosle", "snout", "mouth", "nostr", "ports", "inlet", "vents", "outlt", "beaks"], ["drier", "arid", "sere", "parch", "dryer", "wring", "drear", "sear", "pall", "lack"]],
    },
    {
        "grid": ["arefy", "revie", "igala", "seder", "etern"],
        "h": [["parch", "dryup", "arefy", "wring", "suckd", "wizen", "desic", "evapo", "scald", "toast"], ["excel", "revie", "beat", "top", "best", "rise", "win", "lead", "rule", "boss"], ["igala", "tribe", "people", "race", "ethni", "nation", "yorub", "niger", "triba", "tribu"], ["seder", "meal", "food", "feast", "dine", "dish", "supper", "banqu", "treat", "fetes"], ["eterl", "etern", "everl", "forev", "immor", "endur", "const", "perma", "durab", "timeless"]],
        "v": [["arise", "climb", "soar", "ascen", "mount", "leaps", "scale", "clamb", "steps", "jump"], ["regain", "renew", "recoi", "recla", "retri", "regra", "reget", "reapo", "reboo", "reset"], ["dodge", "elude", "shirk", "escap", "hide", "evade", "flee", "duck", "ditch", "evite"], ["filer", "files", "rasps", "grind", "blade", "sawer", "tool", "sharp", "knife", "metal"], ["yearn", "long", "ache", "crave", "desir", "need", "want", "thirst", "hunger", "lust"]],
    },
    {
        "grid": ["bebop", "urena", "friar", "fonge", "orgal"],
        "h": [["bebop", "jazzy", "music", "salsa", "swing", "blues", "riffs", "drums", "horns", "notes"], ["senna", "urena", "herbs", "flora", "mints", "trees", "leaves", "oils", "spice", "lavas"], ["monk", "friar", "nun", "saint", "clerk", "deity", "mystic", "faith", "pious", "sacra"], ["fetch", "carry", "fonge", "take", "seize", "hold", "grab", "earn", "gain", "yield"], ["tart", "argal", "orgal", "lemon", "sours", "wines", "taste", "tangs", "zesty", "acid"]],
        "v": [["buffo", "clown", "actor", "joker", "wit", "humor", "silly", "gag", "role", "fool"], ["error", "fault", "flaw", "slip", "oops", "blips", "bugs", "glitch", "bugs", "boob"], ["being", "alive", "human", "being", "exist", "life", "creed", "soul", "love", "kind"], ["fishy", "onaga", "ruby", "salmo", "tuna", "sushi", "prawn", "trout", "shrim", "codex"], ["dress", "appar", "parel", "gowns", "style", "drape", "shirts", "veils", "outfi", "apron"]],
    },
]

LETTERS = "eeeeaaaiiioooottnnssrrhhllddcumwfgypbvk"


def cw_lines(grid):
    rows = [grid[r] for r in range(5)]
    cols = [[grid[r][c] for r in range(5)] for c in range(5)]
    return rows, cols


def cw_succ(ctx):
    h, v = ctx

    def succ(grid):
        out = []
        rows, cols = cw_lines(grid)
        for i in range(5):
            for w in h[i]:
                if len(w) == 5 and all(x is None or x == w[k] for k, x in enumerate(rows[i])):
                    g = [list(r) for r in grid]
                    g[i] = list(w)
                    if g != grid:
                        out.append(g)
            for w in v[i]:
                if len(w) == 5 and all(x is None or x == w[k] for k, x in enumerate(cols[i])):
                    g = [list(r) for r in grid]
                    for k in range(5):
                        g[k][i] = w[k]
                    if g != grid:
                        out.append(g)
        return out

    return succ


def cw_goal(ctx):
    h, v = ctx

    def goal(grid):
        if any(c is None for r in grid for c in r):
            return False
        rows, cols = cw_lines(grid)
        return all("".join(rows[i]) in h[i] and "".join(cols[i]) in v[i] for i in range(5))

    return goal


def dfs_solves(start, succ, goal):
    seen = {json.dumps(start)}
    stack = [start]
    while stack:
        s = stack.pop()
        if goal(s):
            return True, len(seen)
        for t in succ(s):
            k = json.dumps(t)
            if k not in seen:
                seen.add(k)
                stack.append(t)
    return False, len(seen)


def gen_crossword(rng):
    def near(word):
        w = list(word)
        for _ in range(rng.choice([1, 2])):
            w[rng.randrange(5)] = rng.choice(LETTERS)
        return "".join(w)

    def clue_list(answer):
        words = {answer}
        out = [answer]
        while len(out) < 10:
            r = rng.random()
            if r < 0.2:
                w = near(answer)
            elif r < 0.85:
                w = "".join(rng.choice(LETTERS) for _ in range(5))
            else:
                w = "".join(rng.choice(LETTERS) for _ in range(rng.choice([3, 4, 6])))
            if w not in words:
                words.add(w)
                out.append(w)
        rng.shuffle(out)
        return out

    def puzzle(iid, h, v):
        ctx = {"horizontal_clues": h, "vertical_clues": v}
        return instance("crossword", iid, [[None] * 5 for _ in range(5)], ctx, ctx)

    unit_puzzles = [puzzle(f"cw-unit-{i + 1}", p["h"], p["v"]) for i, p in enumerate(UNIT_TEST_CW)]
    generated = []
    while len(generated) < 17:
        grid = [[rng.choice(LETTERS) for _ in range(5)] for _ in range(5)]
        rows, cols = cw_lines(grid)
        h = [clue_list("".join(r)) for r in rows]
        v = [clue_list("".join(c)) for c in cols]
        generated.append(puzzle(f"cw-{len(generated) + 4:02d}", h, v))
    stats = {}
    for inst in unit_puzzles + generated:
        ctx = (inst["ctx"]["horizontal_clues"], inst["ctx"]["vertical_clues"])
        ok, n = dfs_solves(inst["initial"], cw_succ(ctx), cw_goal(ctx))
        assert ok, inst["id"]
        stats[inst["id"]] = n
    return unit_puzzles, unit_puzzles + generated, stats


# ---------------------------------------------------------------- prontoqa
NONSENSE = [
    "wumpus", "yumpus", "zumpus", "dumpus", "rompus", "numpus", "tumpus", "vumpus",
    "impus", "jompus", "gorpus", "shumpus", "lempus", "sterpus", "grimpus", "lorpus", "brimpus",
]
PROPS = [
    "bony", "small", "real", "red", "hot", "sour", "fruity", "liquid", "opaque",
    "bright", "happy", "dull", "kind", "wooden", "metallic", "transparent", "feisty", "shy",
]


def neg(p):
    return p[4:] if p.startswith("not-") else "not-" + p


def closure(start, rules):
    facts = set(start)
    changed = True
    while changed:
        changed = False
        for a, b in rules:
            if a in facts and b not in facts:
                facts.add(b)
                changed = True
    return facts


def gen_prontoqa(rng):
    def make(iid, answer):
        cats = rng.sample(NONSENSE, rng.randint(4, 6))
        chain = cats[: rng.randint(3, len(cats) - 1)]
        distract = [c for c in cats if c not in chain]
        props = rng.sample(PROPS, 5)
        rules = [[a, b] for a, b in zip(chain, chain[1:])]
        target = props[0]
        holder = rng.choice(chain[1:])
        literal = target if rng.random() < 0.5 else neg(target)
        rules.append([holder, literal])
        for d in distract:
            rules.append([d, neg(literal)])
        for p in props[1:]:
            rules.append([rng.choice(cats), p if rng.random() < 0.5 else neg(p)])
        rng.shuffle(rules)
        goal = literal if answer else neg(literal)
        entity = chain[0]
        derivable = goal in closure([entity], rules)
        assert derivable == answer
        return instance("prontoqa", iid, [entity], rules, goal, answer)

    soundness = [make(f"pq-unit-{i + 1}", a) for i, a in enumerate([True, False, True])]
    evals = [make(f"pq-{i + 1:03d}", rng.random() < 0.5) for i in range(100)]
    return soundness, evals, {}


# ---------------------------------------------------------------- sokoban
def parse_level(rows):
    grid, stones, player = [], [], None
    for r, line in enumerate(rows):
        row = []
        for c, ch in enumerate(line):
            if ch == "#":
                row.append(1)
            elif ch in ".*+":
                row.append(2)
            else:
                row.append(0)
            if ch in "$*":
                stones.append([r, c])
            if ch in "@+":
                player = [r, c]
        grid.append(row)
    return {"at-player": player, "at-stone": stones}, grid


def sk_succ(grid):
    def free(r, c):
        return 0 <= r < len(grid) and 0 <= c < len(grid[r]) and grid[r][c] != 1

    def succ(s):
        out = []
        pr, pc = s["at-player"]
        stones = [tuple(x) for x in s["at-stone"]]
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            tr, tc = pr + dr, pc + dc
            if not free(tr, tc):
                continue
            if (tr, tc) in stones:
                br, bc = tr + dr, tc + dc
                if not free(br, bc) or (br, bc) in stones:
                    continue
                ns = [list(x) if x != (tr, tc) else [br, bc] for x in stones]
                out.append({"at-player": [tr, tc], "at-stone": ns})
            else:
                out.append({"at-player": [tr, tc], "at-stone": [list(x) for x in stones]})
        return out

    return succ


def sk_goal(grid):
    return lambda s: all(grid[r][c] == 2 for r, c in s["at-stone"])


def sk_key(s):
    return (tuple(s["at-player"]), tuple(sorted(tuple(x) for x in s["at-stone"])))


LEVELS = {
    "sk-01": [
        "#######",
        "#     #",
        "# $ . #",
        "#  @  #",
        "#######",
    ],
    "sk-02": [
        "#######",
        "#.  $ #",
        "# #   #",
        "#  $ .#",
        "#  @  #",
        "#######",
    ],
    "sk-03": [
        "########",
        "#   #  #",
        "# $  $ #",
        "# .##. #",
        "#  @   #",
        "########",
    ],
    "sk-unit-1": [
        "######",
        "# .  #",
        "#    #",
        "# $  #",
        "#  @ #",
        "######",
    ],
    "sk-unit-2": [
        "#####",
        "#@$.#",
        "#####",
    ],
    "sk-unit-3": [
        "######",
        "#.   #",
        "#$## #",
        "#  @ #",
        "######",
    ],
}


def gen_sokoban(rng):
    lengths = {}
    insts = {}
    for iid, rows in LEVELS.items():
        state, grid = parse_level(rows)
        width = max(len(r) for r in grid)
        grid = [r + [0] * (width - len(r)) for r in grid]
        insts[iid] = instance("sokoban", iid, state, grid, grid)
        lengths[iid] = bfs_len(state, sk_succ(grid), sk_goal(grid), sk_key)
    soundness = [insts[k] for k in ("sk-unit-1", "sk-unit-2", "sk-unit-3")]
    evals = [insts[k] for k in ("sk-01", "sk-02", "sk-03")]
    return soundness, evals, lengths


def main():
    write = "--write" in sys.argv
    gens = {
        "game24": gen_game24,
        "blocksworld": gen_blocks,
        "crossword": gen_crossword,
        "prontoqa": gen_prontoqa,
        "sokoban": gen_sokoban,
    }
    for domain, gen in gens.items():
        rng = random.Random(f"autotos-{domain}")
        soundness, evals, info = gen(rng)
        print(f"{domain}: {len(soundness)} soundness, {len(evals)} eval")
        for k, v in info.items():
            print(f"  {k}: {v}")
        if write:
            path = DATA / domain / "instances.json"
            with open(path, "w") as f:
                json.dump({"soundness": soundness, "eval": evals}, f, indent=1)
                f.write("\n")


if __name__ == "__main__":
    main()
