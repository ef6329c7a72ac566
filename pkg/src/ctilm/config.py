"""JSON run configuration shared by the simulate, loglik, fit, predict and control commands.

Relative file paths are resolved against the directory holding the config
file. The schema rejects unknown keys, so typos fail before any computation.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .epidemic import Framework, PeriodSpec, SimConfig, build_event_history
from .exceptions import InvalidConfig, ValidationError
from .io import read_covariates, read_edge_list, read_event_history, read_locations, read_matrix
from .kernels import KernelKind, KernelSpec, ParameterState
from .mcmc import Datatype, FitConfig, FitProblem, ModelPriors, PeriodConfig, Prior, PriorAndProposal
from .networks import euclidean_distances

_NUM = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}
_NUM_LIST = {"type": "array", "items": _NUM, "minItems": 1}
_PAIR = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_PATH = {"type": ["string", "null"]}

_PARAM = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "value": _NUM,
        "initial": {"oneOf": [_NUM, _NUM_LIST]},
        "prior": {
            "type": "array",
            "prefixItems": [{"enum": ["gamma", "halfnormal", "uniform"]}, _NUM, _NUM],
            "minItems": 3,
            "maxItems": 3,
        },
        "proposal_variance": {"type": "number", "minimum": 0},
    },
}
_PARAM_LIST = {"type": "array", "items": _PARAM, "minItems": 1}

_PERIOD = {
    "type": "object",
    "additionalProperties": False,
    "required": ["shape"],
    "properties": {
        "shape": {"type": "number", "exclusiveMinimum": 0},
        "rate": {"type": "number", "exclusiveMinimum": 0},
        "initial": {"oneOf": [_NUM, _NUM_LIST]},
        "prior": _PAIR,
        "proposal": _PAIR,
    },
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["framework", "kernel", "parameters"],
    "properties": {
        "framework": {"enum": ["SIR", "SINR"]},
        "seed": {"type": "integer", "minimum": 0},
        "workers": _POS_INT,
        "output_dir": {"type": "string"},
        "kernel": {
            "type": "object",
            "additionalProperties": False,
            "required": ["type"],
            "properties": {"type": {"enum": [k.value for k in KernelKind]}},
        },
        "data": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "population": _POS_INT,
                "locations": _PATH,
                "distances": _PATH,
                "network": _PATH,
                "network_matrix": _PATH,
                "network_directed": {"type": "boolean"},
                "sus_covariates": _PATH,
                "trans_covariates": _PATH,
                "history": _PATH,
            },
        },
        "parameters": {
            "type": "object",
            "additionalProperties": False,
            "required": ["sus_coeffs"],
            "properties": {
                "sus_coeffs": _PARAM_LIST,
                "sus_powers": _PARAM_LIST,
                "trans_coeffs": _PARAM_LIST,
                "trans_powers": _PARAM_LIST,
                "kernel": {"type": "array", "items": _PARAM},
                "spark": _PARAM,
                "gamma": _PARAM,
            },
        },
        "periods": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"infectious": _PERIOD, "incubation": _PERIOD, "delay": _PERIOD},
        },
        "simulation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tmax": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "initial_history": _PATH,
                "initial_id": _POS_INT,
                "initial_period": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "fit": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "datatype": {"enum": [d.value for d in Datatype]},
                "nsim": _POS_INT,
                "nchains": _POS_INT,
                "parallel": {"type": "boolean"},
                "blockupdate": {"type": "array", "items": _POS_INT, "minItems": 2, "maxItems": 2},
                "latent_thin": _POS_INT,
            },
        },
        "predict": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "start": {"type": "integer", "minimum": 0},
                "thin": _POS_INT,
                "prefix": _POS_INT,
                "reps": _POS_INT,
            },
        },
        "control": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "radii": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
                "reps": _POS_INT,
                "grid": {"type": "array", "items": _NUM, "minItems": 1},
            },
        },
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def validate_config(doc):
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise InvalidConfig(f"{where}: {e.message}")
    _check_semantics(doc)
    return doc


def _check_semantics(doc):
    framework = Framework(doc["framework"])
    kind = KernelKind(doc["kernel"]["type"])
    params = doc["parameters"]
    if len(params.get("kernel", [])) != kind.n_params:
        raise InvalidConfig(f"parameters/kernel: {kind.value} takes {kind.n_params} parameter(s)")
    if framework is Framework.SIR and "gamma" in params:
        raise InvalidConfig("parameters/gamma: the notification effect only exists in SINR models")
    periods = doc.get("periods", {})
    allowed = {"infectious"} if framework is Framework.SIR else {"incubation", "delay"}
    extra = set(periods) - allowed
    if extra:
        raise InvalidConfig(f"periods: {framework.value} has no {', '.join(sorted(extra))} period")
    for group in ("sus", "trans"):
        coeffs = params.get(f"{group}_coeffs")
        powers = params.get(f"{group}_powers")
        if powers is not None and (coeffs is None or len(powers) != len(coeffs)):
            raise InvalidConfig(f"parameters/{group}_powers must match {group}_coeffs in length")
    for name, entry in params.items():
        entries = entry if isinstance(entry, list) else [entry]
        for e in entries:
            if "prior" in e:
                try:
                    Prior(e["prior"][0], e["prior"][1:])
                except InvalidConfig as exc:
                    raise InvalidConfig(f"parameters/{name}: {exc}") from None


def load_config(path):
    """Parse and validate a config file; returns a :class:`RunConfig`."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    validate_config(doc)
    return RunConfig(doc, path.parent)


@dataclass
class RunConfig:
    doc: dict
    base: Path

    @property
    def framework(self):
        return Framework(self.doc["framework"])

    @property
    def kind(self):
        return KernelKind(self.doc["kernel"]["type"])

    @property
    def seed(self):
        return int(self.doc.get("seed", 0))

    def section(self, name):
        return self.doc.get(name, {})

    def path(self, key):
        p = self.section("data").get(key)
        if p is None:
            return None
        p = Path(p)
        return p if p.is_absolute() else self.base / p

    # data ------------------------------------------------------------------

    def locations(self):
        p = self.path("locations")
        return None if p is None else read_locations(p)

    def population(self):
        data = self.section("data")
        if "population" in data:
            return int(data["population"])
        for key, reader in (("locations", read_locations), ("distances", read_matrix), ("network_matrix", read_matrix)):
            p = self.path(key)
            if p is not None:
                return reader(p).shape[0]
        for key in ("sus_covariates", "trans_covariates"):
            p = self.path(key)
            if p is not None:
                return read_covariates(p).shape[1]
        raise InvalidConfig("data: cannot determine the population size (set data/population)")

    def kernel_spec(self):
        kind = self.kind
        distances = network = None
        if kind.uses_distance:
            p = self.path("distances")
            if p is not None:
                distances = read_matrix(p)
            else:
                loc = self.locations()
                if loc is None:
                    raise InvalidConfig(f"data: kernel {kind.value} needs locations or distances")
                distances = euclidean_distances(loc)
        if kind.uses_network:
            directed = bool(self.section("data").get("network_directed", False))
            if self.path("network_matrix") is not None:
                network = read_matrix(self.path("network_matrix"))
            elif self.path("network") is not None:
                n = distances.shape[0] if distances is not None else self.population()
                network = read_edge_list(self.path("network"), n, directed=directed).matrix
            else:
                raise InvalidConfig(f"data: kernel {kind.value} needs a network")
        return KernelSpec(kind, distances=distances, network=network)

    def covariates(self, key):
        p = self.path(key)
        return None if p is None else read_covariates(p)

    def history(self):
        p = self.path("history")
        if p is None:
            raise InvalidConfig("data/history is required for this command")
        hist = read_event_history(p)
        if hist.framework is not self.framework:
            raise InvalidConfig(f"history is {hist.framework.value} but the config says {self.framework.value}")
        return hist

    # true parameter values (simulate / loglik) -----------------------------

    def _values(self, key, required=False):
        entries = self.section("parameters").get(key)
        if entries is None:
            return None
        many = isinstance(entries, list)
        out = []
        for k, e in enumerate(entries if many else [entries]):
            if "value" not in e:
                raise InvalidConfig(f"parameters/{key}[{k}]: 'value' is needed to simulate or evaluate")
            out.append(float(e["value"]))
        return out if many else out[0]

    def parameter_state(self):
        return ParameterState(
            sus_coeffs=self._values("sus_coeffs"),
            sus_powers=self._values("sus_powers"),
            trans_coeffs=self._values("trans_coeffs"),
            trans_powers=self._values("trans_powers"),
            kernel=self._values("kernel") or [],
            spark=self._values("spark") or 0.0,
            gamma=self._values("gamma") or 1.0,
        )

    def period_specs(self, required=True):
        periods = self.section("periods")
        names = ("infectious",) if self.framework is Framework.SIR else ("incubation", "delay")
        specs = []
        for name in names:
            p = periods.get(name)
            if p is None or "rate" not in p:
                if not required:
                    return None
                raise InvalidConfig(f"periods/{name}: shape and rate are required")
            specs.append(PeriodSpec(p["shape"], p["rate"]))
        return specs[0] if len(specs) == 1 else tuple(specs)

    def sim_config(self, kernel=None):
        kernel = kernel or self.kernel_spec()
        sim = self.section("simulation")
        n = kernel.n
        initial = None
        if sim.get("initial_history"):
            p = Path(sim["initial_history"])
            initial = read_event_history(p if p.is_absolute() else self.base / p)
        elif "initial_id" in sim:
            k = int(sim["initial_id"])
            if k > n:
                raise InvalidConfig("simulation/initial_id exceeds the population size")
            initial = self._single_initial(n, k, float(sim.get("initial_period", 1.0)))
        tmax = sim.get("tmax")
        return SimConfig(
            framework=self.framework,
            kernel=kernel,
            params=self.parameter_state(),
            periods=self.period_specs(),
            sus_covariates=self.covariates("sus_covariates"),
            trans_covariates=self.covariates("trans_covariates"),
            initial_epi=initial,
            tmax=np.inf if tmax is None else float(tmax),
        )

    def _single_initial(self, n, k, period):
        inf = np.full(n, np.nan)
        rem = np.full(n, np.nan)
        inf[k - 1] = 0.0
        if self.framework is Framework.SIR:
            rem[k - 1] = period
            return build_event_history(self.framework, inf, rem)
        notif = np.full(n, np.nan)
        notif[k - 1] = period / 2
        rem[k - 1] = period
        return build_event_history(self.framework, inf, rem, notif)

    # fitting ----------------------------------------------------------------

    def _pp(self, key, entry, k):
        if "prior" not in entry:
            raise InvalidConfig(f"parameters/{key}[{k}]: a prior is needed for fitting")
        initial = entry.get("initial", entry.get("value"))
        if initial is None:
            raise InvalidConfig(f"parameters/{key}[{k}]: an initial value is needed for fitting")
        fam, a, b = entry["prior"]
        return PriorAndProposal(Prior(fam, (a, b)), initial, entry.get("proposal_variance", 0.0))

    def model_priors(self):
        params = self.section("parameters")

        def group(key):
            entries = params.get(key)
            if entries is None:
                return None
            return [self._pp(key, e, k) for k, e in enumerate(entries)]

        def single(key):
            e = params.get(key)
            return None if e is None else self._pp(key, e, 0)

        return ModelPriors(
            sus_coeffs=group("sus_coeffs"),
            sus_powers=group("sus_powers"),
            trans_coeffs=group("trans_coeffs"),
            trans_powers=group("trans_powers"),
            kernel=group("kernel") or [],
            spark=single("spark"),
            gamma=single("gamma"),
        )

    def fit_config(self, parallel=None, workers=None):
        f = self.section("fit")
        datatype = Datatype(f.get("datatype", "known-epidemic"))
        delta = None
        if datatype is not Datatype.KNOWN_EPIDEMIC:
            delta = {}
            for name, p in self.section("periods").items():
                initial = p.get("initial", p.get("rate"))
                if initial is None:
                    raise InvalidConfig(f"periods/{name}: an initial rate is needed for fitting")
                delta[name] = PeriodConfig(p["shape"], initial, p.get("prior"), p.get("proposal"))
        return FitConfig(
            datatype=datatype,
            nsim=int(f.get("nsim", 1000)),
            nchains=int(f.get("nchains", 1)),
            parallel=bool(f.get("parallel", False)) if parallel is None else parallel,
            blockupdate=tuple(f["blockupdate"]) if "blockupdate" in f else None,
            delta=delta,
            latent_thin=int(f.get("latent_thin", 10)),
            workers=workers if workers is not None else self.doc.get("workers"),
        )

    def fit_problem(self):
        kernel = self.kernel_spec()
        return FitProblem(
            history=self.history(),
            kernel=kernel,
            priors=self.model_priors(),
            sus_covariates=self.covariates("sus_covariates"),
            trans_covariates=self.covariates("trans_covariates"),
        )
