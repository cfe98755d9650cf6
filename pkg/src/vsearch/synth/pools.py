"""Bundled word pools for the synthetic professional-search world.

Pools are deterministic expansions of small base lists, sized so the full
pipeline trains in minutes (~1K first names, ~1K last names, 500 companies,
~450 titles, ~400 skills, 200 schools, 200 geos). Everything is lowercase;
multi-word entries stay within 4 tokens so the tagger's max segment length
covers them.
"""

from __future__ import annotations

_FIRST_A = [
    "al", "an", "ar", "be", "bren", "cal", "car", "dan", "del", "eli",
    "er", "fa", "fin", "gar", "hal", "is", "jan", "jo", "ka", "kel",
    "lan", "lor", "mar", "mel", "nor", "ol", "pa", "quin", "ra", "ren",
    "sa", "sel", "ta", "tor", "ul", "va", "vin", "wes", "yas", "zan",
]
_FIRST_B = [
    "a", "an", "da", "dra", "en", "ena", "ia", "iel", "ina", "ita",
    "ka", "la", "lyn", "na", "on", "ora", "os", "ric", "us", "via",
    "ya", "yn", "ys", "za", "zo",
]

_LAST_A = [
    "ander", "bak", "barn", "carl", "clay", "dav", "edmon", "farn", "fish",
    "gold", "gray", "hale", "harp", "hart", "ing", "jens", "kent", "kow",
    "lars", "lind", "mend", "mor", "nils", "nor", "ols", "pars", "pearl",
    "quig", "rey", "rob", "sand", "shep", "stein", "thorn", "ulric",
    "vance", "vand", "walk", "well", "west", "whit", "wick", "wil",
    "wood", "wright", "wynn", "yard", "york", "young", "zimm",
]
_LAST_B = [
    "berg", "brook", "by", "dale", "er", "field", "ford", "ham", "hardt",
    "land", "ley", "low", "man", "mark", "mont", "more", "sen", "son",
    "ston", "worth",
]

_COMPANY_A = [
    "acu", "aero", "apex", "arc", "astra", "atlas", "axio", "beacon",
    "bolt", "bright", "cedar", "cirro", "cobalt", "core", "delta",
    "ember", "flux", "forge", "fusion", "gale", "glow", "halo", "helio",
    "ion", "iron", "kite", "lumen", "lyra", "merid", "nimbus", "nova",
    "onyx", "orbit", "orion", "peak", "pixel", "pulse", "quanta", "quill",
    "raven", "ridge", "sol", "spark", "summit", "terra", "tide", "vega",
    "vertex", "wave", "zenith",
]
_COMPANY_B = [
    "tech", "soft", "labs", "works", "systems", "data", "cloud", "dynamics",
    "logic", "networks",
]

_SENIORITY = ["senior", "junior"]
_DOMAIN = [
    "software", "data", "machine learning", "product", "research",
    "security", "network", "cloud", "frontend", "backend", "mobile",
    "devops", "platform", "marketing", "sales",
]
_ROLE = [
    "engineer", "scientist", "manager", "analyst", "developer",
    "designer", "architect", "consultant", "specialist", "recruiter",
]

_SKILL_BASE = [
    "python", "java", "scala", "kotlin", "swift", "rust", "golang", "ruby",
    "javascript", "typescript", "react", "angular", "django", "spring",
    "hadoop", "spark", "kafka", "airflow", "kubernetes", "docker",
    "terraform", "ansible", "linux", "postgres", "mysql", "mongodb",
    "redis", "elasticsearch", "graphql", "grpc", "tensorflow", "pytorch",
    "statistics", "econometrics", "optimization", "forecasting",
    "visualization", "tableau", "excel", "powerpoint", "agile", "scrum",
    "kanban", "jira", "figma", "sketch", "photoshop", "illustrator",
    "copywriting", "seo", "sem", "crm", "salesforce", "negotiation",
    "recruiting", "sourcing", "onboarding", "payroll", "compliance",
    "auditing", "accounting", "budgeting", "logistics", "procurement",
    "manufacturing", "robotics", "embedded", "firmware", "verilog",
    "cad", "solidworks", "biotech", "genomics", "chemistry", "physics",
    "radiology", "nursing", "teaching", "translation", "journalism",
]
_SKILL_COMBO_HEAD = [
    "data", "cloud", "mobile", "web", "game", "database", "pipeline",
    "model", "risk", "brand", "content", "growth", "supply chain",
    "quality", "test", "release", "incident", "capacity", "vendor",
    "customer", "partner", "revenue", "market", "talent", "performance",
    "portfolio", "program", "project", "service", "system", "platform",
    "api", "field", "channel", "category", "campaign", "community",
    "product", "pricing", "search",
]
_SKILL_COMBO_TAIL = [
    "engineering", "development", "analysis", "management", "design",
    "architecture", "testing", "operations",
]

_SCHOOL_A = [
    "ashford", "bayview", "brookfield", "cambria", "clearwater", "crestwood",
    "eastgate", "elmhurst", "fairmont", "glenridge", "granville", "harborview",
    "hillcrest", "kingsford", "lakeshore", "larkspur", "maplewood", "meridian",
    "millbrook", "northgate", "oakdale", "pinecrest", "redwood", "ridgeway",
    "riverton", "rosewood", "silverlake", "southport", "springfield",
    "stonebridge", "summerfield", "thornton", "valleyforge", "westbrook",
    "westfield", "whitman", "willowbrook", "winfield", "woodhaven", "wycliffe",
    "aldergrove", "birchwood", "cedarhurst", "dunmore", "eastwick", "fernhill",
    "goldcrest", "hawthorne", "ivybridge", "juniper",
]
_SCHOOL_B = ["university", "college", "institute", "academy"]

_GEO_A = [
    "north", "south", "east", "west", "new", "lake", "port", "fort",
    "mount", "glen",
]
_GEO_B = [
    "field", "haven", "ville", "burg", "ton", "wood", "ford", "dale",
    "view", "bay",
]
_GEO_SINGLE = [
    "aralon", "bexley", "calder", "dorset", "elkton", "farley", "gresham",
    "hartwell", "ashby", "juneau", "keswick", "lindale", "marlow", "norwood",
    "ostin", "pembroke", "quimby", "rutland", "severn", "tilden", "upton",
    "verona", "walcott", "exford", "yardley", "zelda", "acton", "bardon",
    "corliss", "denholm", "eldridge", "fenwick", "garrow", "hollis",
    "irvington", "jessup", "kendall", "loxley", "merton", "newell",
    "oakley", "preston", "quorn", "ramsay", "selwyn", "truro", "ulverston",
    "vance", "weldon", "yates",
]

# Help-center content: actions x objects, with synonym sets used both by the
# paraphrasing generator and nowhere else (models must learn them from data).
HELP_ACTIONS = [
    "hide", "delete", "change", "update", "cancel", "merge", "export",
    "download", "block", "report", "verify", "reset", "close", "upgrade",
    "share", "edit", "remove", "restore", "unsubscribe", "deactivate",
]
HELP_OBJECTS = [
    "profile", "account", "password", "email", "photo", "resume",
    "subscription", "notification", "message", "connection", "job alert",
    "payment", "invoice", "group invite", "newsletter", "feed",
    "membership", "settings", "updates", "history",
]
HELP_SYNONYMS: dict[str, list[str]] = {
    "hide": ["conceal", "mask"],
    "delete": ["erase", "drop"],
    "change": ["modify", "switch"],
    "update": ["refresh", "revise"],
    "cancel": ["stop", "end"],
    "export": ["extract"],
    "download": ["save"],
    "verify": ["confirm"],
    "reset": ["recover"],
    "remove": ["clear"],
    "close": ["terminate"],
    "edit": ["adjust"],
    "profile": ["page"],
    "account": ["login"],
    "photo": ["picture", "image"],
    "email": ["address"],
    "password": ["passcode"],
    "message": ["inbox"],
    "notification": ["alert"],
    "settings": ["preferences"],
}


def _cross(a: list[str], b: list[str], sep: str = "") -> list[str]:
    return [x + sep + y for x in a for y in b]


FIRST_NAMES = _cross(_FIRST_A, _FIRST_B)
LAST_NAMES = _cross(_LAST_A, _LAST_B)
COMPANIES = _cross(_COMPANY_A, _COMPANY_B) + _cross(_COMPANY_A[:25], ["labs", "group"], " ")
TITLES = (
    _cross(_DOMAIN, _ROLE, " ")
    + [f"{s} {d} {r}" for s in _SENIORITY for d in _DOMAIN for r in _ROLE[:5]][: 300]
)
SKILLS = _SKILL_BASE + _cross(_SKILL_COMBO_HEAD, _SKILL_COMBO_TAIL, " ")
SCHOOLS = _cross(_SCHOOL_A, _SCHOOL_B, " ")
GEOS = _cross(_GEO_A, _GEO_B) + _cross(_GEO_A[:5], _GEO_SINGLE[:10], " ") + _GEO_SINGLE

ENTITY_POOLS: dict[str, list[str]] = {
    "first_name": FIRST_NAMES,
    "last_name": LAST_NAMES,
    "company": COMPANIES,
    "school": SCHOOLS,
    "geo": GEOS,
    "title": TITLES,
    "skill": SKILLS,
}
