"""Command-line entry point for reproducible batch runs.

Commands: validate, score, induce, simulate, deid, agree, classify.
Exit codes: 0 success, 1 domain failure, 2 input format error,
3 external-service error. Every command writes a run manifest with
input hashes so mock-judge runs can be reproduced bit-exactly.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import os
import sys

import qualgraph
from qualgraph.agreement import (
    LabelVector,
    cohens_kappa,
    confusion,
    exact_match,
    kappa_per_gt_normalized,
)
from qualgraph.corpus import load_corpus, normalize_time
from qualgraph.deid import (
    Action,
    DeidPolicy,
    EntityType,
    PseudonymMap,
    apply_policy,
    assign_pseudonyms,
    cluster_entities,
    detect_pii,
    export_tier,
)
from qualgraph.dynamics import Ordinal, SystemState, simulate
from qualgraph.errors import (
    DomainError,
    IntegrityError,
    ParseError,
    PreconditionError,
    ProtocolError,
    QualgraphError,
    TransportError,
)
from qualgraph.fitness import (
    FitParams,
    fit,
    report_to_json,
    report_to_markdown,
    select_level,
)
from qualgraph.graph import Level, deserialize, serialize, validate
from qualgraph.induction import (
    Codebook,
    InductionParams,
    induce,
    load_coded_corpus,
)
from qualgraph.judge import (
    TEMPLATE_VERSION,
    JudgeConfig,
    MockJudge,
    MockRuleSet,
    RemoteJudge,
    classify_landscape_levels,
)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_FORMAT = 2
EXIT_EXTERNAL = 3


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        digest.update(handle.read())
    return digest.hexdigest()


def _manifest_time() -> str:
    # honor SOURCE_DATE_EPOCH so archived runs can be byte-reproducible
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        return _dt.datetime.fromtimestamp(
            int(epoch), _dt.timezone.utc
        ).isoformat()
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def _write_manifest(out_dir: str, command: str, config: dict,
                    input_paths: list[str]) -> None:
    manifest = {
        "tool_version": qualgraph.__version__,
        "command": command,
        "config": config,
        "input_hashes": {p: _sha256(p) for p in sorted(set(input_paths))},
        "judge_template_version": TEMPLATE_VERSION,
        "timestamp": _manifest_time(),
    }
    path = os.path.join(out_dir, "run_manifest.json")
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, sort_keys=True, indent=2)
        handle.write("\n")


def _load_config(args) -> dict:
    config = {}
    if args.config:
        with open(args.config, encoding="utf-8") as handle:
            config = json.load(handle)
    if getattr(args, "out", None):
        config["output_dir"] = args.out
    if getattr(args, "seed", None) is not None:
        config.setdefault("judge", {})["seed"] = args.seed
    if getattr(args, "judge", None):
        config.setdefault("judge", {})["kind"] = args.judge
    return config


def _build_judge(config: dict):
    judge_cfg = config.get("judge", {})
    kind = judge_cfg.get("kind", "mock")
    jc = JudgeConfig(
        n_samples=judge_cfg.get("n_samples", 3),
        low_agreement_threshold=judge_cfg.get("low_agreement_threshold", 0.67),
        seed=judge_cfg.get("seed", 0),
        endpoint=judge_cfg.get("endpoint"),
        meaning_fixture=judge_cfg.get("meaning_fixture"),
        modeling_fixture=judge_cfg.get("modeling_fixture"),
    )
    if kind == "mock":
        if "seed" not in judge_cfg:
            raise DomainError("judge=mock requires an explicit seed")
        rules = MockRuleSet()
        if judge_cfg.get("rules"):
            with open(judge_cfg["rules"], encoding="utf-8") as handle:
                rules = MockRuleSet.from_json(handle.read())
        return MockJudge(rules, jc), jc
    if kind == "remote":
        return RemoteJudge(jc), jc
    raise DomainError(f"unknown judge kind {kind!r}")


def _fit_params(config: dict) -> FitParams:
    f = config.get("fit", {})
    return FitParams(
        lam=f.get("lambda", 2.0),
        epsilon=f.get("epsilon", 1e-9),
        m=f.get("m", 2),
        k=f.get("k", 5),
        beta=f.get("beta", 0.5),
        gamma=f.get("gamma", 0.01),
        horizon=f.get("horizon", 10),
        closed_form=f.get("closed_form", False),
    )


def _induction_params(config: dict) -> InductionParams:
    p = config.get("induction", {})
    return InductionParams(
        tau_pmi=p.get("tau_pmi", 0.1),
        tau_prec=p.get("tau_prec", 0.7),
        w=p.get("w", 5),
        epsilon=p.get("epsilon", 1e-9),
        top_k_per_node=p.get("top_k_per_node", 5),
        cluster_threshold=p.get("cluster_threshold", 0.8),
        union_survival=p.get("union_survival", True),
        max_evidence=p.get("max_evidence", 5),
    )


def cmd_validate(args) -> int:
    try:
        with open(args.graph, "rb") as handle:
            graph = deserialize(handle.read())
    except ParseError as exc:
        print(f"parse error: {exc} (path: {exc.path})", file=sys.stderr)
        return EXIT_FORMAT
    report = validate(graph)
    out = {
        "passed": report.passed,
        "violations": [
            {"rule": r, "subject": s, "message": m} for r, s, m in report.violations
        ],
    }
    print(json.dumps(out, sort_keys=True, indent=2))
    return EXIT_OK if report.passed else EXIT_DOMAIN


def cmd_score(args) -> int:
    config = _load_config(args)
    out_dir = config.get("output_dir", ".")
    os.makedirs(out_dir, exist_ok=True)
    try:
        judge, _jc = _build_judge(config)
        params = _fit_params(config)
        with open(config["corpus"], "rb") as handle:
            corpus = normalize_time(load_corpus(handle))
        graph_paths = config.get("graphs") or [config["graph"]]
        graphs = []
        for path in graph_paths:
            with open(path, "rb") as handle:
                graphs.append(deserialize(handle.read()))
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (KeyError, OSError) as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return EXIT_FORMAT

    try:
        if args.select_level and len(graphs) > 1:
            chosen, reports = select_level(graphs, corpus, judge, params)
            for graph_id, report in sorted(reports.items()):
                _emit_report(out_dir, report, prefix=f"report_{graph_id}")
            print(chosen.graph_id)
        else:
            report = fit(graphs[0], corpus, judge, params)
            _emit_report(out_dir, report, prefix="report")
            print(json.dumps({"fit": report.fit, "graph_id": report.graph.graph_id}))
    except (TransportError, ProtocolError) as exc:
        print(f"judge failure: {exc}", file=sys.stderr)
        return EXIT_EXTERNAL
    except (PreconditionError, DomainError, IntegrityError) as exc:
        print(f"domain failure: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    inputs = [config["corpus"], *config.get("graphs", [])]
    if config.get("judge", {}).get("rules"):
        inputs.append(config["judge"]["rules"])
    _write_manifest(out_dir, "score", config, inputs)
    return EXIT_OK


def _emit_report(out_dir: str, report, prefix: str) -> None:
    formats = ("json", "md")
    with open(os.path.join(out_dir, f"{prefix}.json"), "wb") as handle:
        handle.write(report_to_json(report))
        handle.write(b"\n")
    with open(os.path.join(out_dir, f"{prefix}.md"), "w", encoding="utf-8") as handle:
        handle.write(report_to_markdown(report))
    with open(os.path.join(out_dir, f"{prefix}_graph.json"), "wb") as handle:
        handle.write(serialize(report.graph))
        handle.write(b"\n")
    del formats


def cmd_induce(args) -> int:
    config = _load_config(args)
    out_dir = config.get("output_dir", ".")
    os.makedirs(out_dir, exist_ok=True)
    try:
        judge, _jc = _build_judge(config)
        with open(config["corpus"], "rb") as handle:
            coded = load_coded_corpus(handle)
        with open(config["codebook"], encoding="utf-8") as handle:
            codebook = Codebook.from_json(handle.read())
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (KeyError, OSError) as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    try:
        graph = induce(coded, codebook, _induction_params(config), judge,
                       _fit_params(config))
    except (TransportError, ProtocolError) as exc:
        print(f"judge failure: {exc}", file=sys.stderr)
        return EXIT_EXTERNAL
    path = os.path.join(out_dir, "induced_graph.json")
    with open(path, "wb") as handle:
        handle.write(serialize(graph))
        handle.write(b"\n")
    _write_manifest(out_dir, "induce", config,
                    [config["corpus"], config["codebook"]])
    print(path)
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        with open(args.graph, "rb") as handle:
            graph = deserialize(handle.read())
        with open(args.init, encoding="utf-8") as handle:
            init_doc = json.load(handle)
    except (ParseError, json.JSONDecodeError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    try:
        init = SystemState(
            values={var: Ordinal[name] for var, name in init_doc.items()}
        )
        trajectory = simulate(graph, init, args.horizon)
    except (KeyError, PreconditionError) as exc:
        print(f"domain failure: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "trajectory.csv")
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", "var", "value"])
        for state in trajectory.states:
            for var in sorted(state.values):
                writer.writerow([state.t, var, state.values[var].name])
    _write_manifest(out_dir, "simulate", {"horizon": args.horizon},
                    [args.graph, args.init])
    print(path)
    return EXIT_OK


def _parse_policy(doc: dict) -> DeidPolicy:
    actions = {
        EntityType(entity): Action(action)
        for entity, action in doc.get("actions", {}).items()
    }
    return DeidPolicy(
        actions=actions,
        date_granularity=doc.get("date_granularity", "month"),
        date_shift_bounds=tuple(doc.get("date_shift_bounds", (-30, 30))),
        hash_doc_ids=doc.get("hash_doc_ids", False),
    )


def cmd_deid(args) -> int:
    config = _load_config(args)
    out_dir = config.get("output_dir", ".")
    os.makedirs(out_dir, exist_ok=True)
    try:
        with open(config["corpus"], "rb") as handle:
            corpus = load_corpus(handle)
        with open(args.policy, encoding="utf-8") as handle:
            policy = _parse_policy(json.load(handle))
    except (ParseError, json.JSONDecodeError, ValueError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    if not args.map_store:
        print("a --map-store path outside the output directory is required",
              file=sys.stderr)
        return EXIT_DOMAIN
    map_path = os.path.abspath(args.map_store)
    if map_path.startswith(os.path.abspath(out_dir) + os.sep):
        print("map store must not live inside the output directory",
              file=sys.stderr)
        return EXIT_DOMAIN
    key = os.environ.get("QUALGRAPH_MAP_KEY")
    key_bytes = key.encode("utf-8") if key else None
    if os.path.exists(map_path):
        map_store = PseudonymMap.load(map_path, key=key_bytes)
    else:
        map_store = PseudonymMap()

    spans, errors = detect_pii(corpus)
    clusters = cluster_entities(
        spans, config.get("deid", {}).get("cluster_threshold", 0.8)
    )
    assign_pseudonyms(clusters, map_store)
    seed = args.seed if args.seed is not None else config.get("deid", {}).get("seed", 0)
    try:
        deid_corpus, audit = apply_policy(corpus, spans, map_store, policy,
                                          seed=seed)
        bundle = export_tier(
            args.tier,
            corpus=deid_corpus if args.tier in ("B", "C") else None,
            graphs=[],
            codebook=config.get("codebook_inline", {}),
            confirm_raw=args.confirm_raw,
        )
    except (IntegrityError, PreconditionError, DomainError) as exc:
        print(f"domain failure: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    map_store.save(map_path, key=key_bytes)
    with open(os.path.join(out_dir, f"tier_{args.tier}_bundle.json"), "w",
              encoding="utf-8") as handle:
        json.dump(bundle.contents, handle, sort_keys=True, indent=2)
        handle.write("\n")
    with open(os.path.join(out_dir, "audit_log.jsonl"), "w",
              encoding="utf-8") as handle:
        for entry in audit:
            handle.write(json.dumps(entry, sort_keys=True))
            handle.write("\n")
    if errors:
        with open(os.path.join(out_dir, "detector_errors.json"), "w",
                  encoding="utf-8") as handle:
            json.dump(errors, handle, indent=2)
    _write_manifest(out_dir, "deid", config, [config["corpus"], args.policy])
    return EXIT_OK


def _read_label_csv(path: str) -> LabelVector:
    items = []
    with open(path, encoding="utf-8", newline="") as handle:
        for row in csv.reader(handle):
            if not row or row[0] == "item_id":
                continue
            items.append((row[0], Level(row[1])))
    return LabelVector(items=tuple(items))


def cmd_agree(args) -> int:
    try:
        pred = _read_label_csv(args.pred)
        gold = _read_label_csv(args.gold)
    except (ValueError, OSError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    try:
        matrix = confusion(pred, gold)
        out = {
            "confusion": matrix.tolist(),
            "exact_match": exact_match(pred, gold),
            "kappa_standard": cohens_kappa(matrix),
            "kappa_per_gt_normalized": kappa_per_gt_normalized(matrix),
        }
    except DomainError as exc:
        print(f"domain failure: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    print(json.dumps(out, sort_keys=True, indent=2))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "agreement.json"), "w",
                  encoding="utf-8") as handle:
            json.dump(out, handle, sort_keys=True, indent=2)
        _write_manifest(args.out, "agree", {}, [args.pred, args.gold])
    return EXIT_OK


def cmd_classify(args) -> int:
    config = _load_config(args)
    try:
        judge, jc = _build_judge(config)
        with open(args.paper, encoding="utf-8") as handle:
            paper_text = handle.read()
    except (OSError, DomainError) as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    try:
        meaning, modeling, rationales = classify_landscape_levels(
            paper_text, jc, judge=judge if isinstance(judge, RemoteJudge) else None
        )
    except (TransportError, ProtocolError) as exc:
        print(f"judge failure: {exc}", file=sys.stderr)
        return EXIT_EXTERNAL
    print(json.dumps(
        {
            "meaning_level": meaning.value,
            "modeling_level": modeling.value,
            "rationales": rationales,
        },
        sort_keys=True, indent=2,
    ))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qualgraph",
        description="Evidence-anchored qualitative model toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def shared(p):
        p.add_argument("--config", help="JSON run configuration file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="mock judge seed")
        p.add_argument("--judge", choices=["mock", "remote"],
                       help="judge implementation")
        p.add_argument("--report-format", default="json,md",
                       help="comma-separated report formats")

    p = sub.add_parser("validate", help="validate a graph file")
    p.add_argument("graph")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("score", help="score graph fit against a corpus")
    shared(p)
    p.add_argument("--select-level", action="store_true",
                   help="pick the best of several candidate graphs")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("induce", help="induce a relation graph from codes")
    shared(p)
    p.set_defaults(func=cmd_induce)

    p = sub.add_parser("simulate", help="run the qualitative simulator")
    p.add_argument("graph")
    p.add_argument("init", help="JSON map of state var -> LOW/MID/HIGH")
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("deid", help="de-identify a corpus")
    shared(p)
    p.add_argument("--policy", required=True, help="policy JSON file")
    p.add_argument("--tier", choices=["A", "B", "C"], default="B")
    p.add_argument("--map-store", required=True,
                   help="pseudonym map path, kept apart from outputs")
    p.add_argument("--confirm-raw", action="store_true",
                   help="acknowledge raw-text export (tier C)")
    p.set_defaults(func=cmd_deid)

    p = sub.add_parser("agree", help="agreement statistics for two label files")
    p.add_argument("pred")
    p.add_argument("gold")
    p.add_argument("--out")
    p.set_defaults(func=cmd_agree)

    p = sub.add_parser("classify", help="classify a paper's landscape levels")
    shared(p)
    p.add_argument("paper")
    p.set_defaults(func=cmd_classify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except QualgraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc, ParseError):
            return EXIT_FORMAT
        if isinstance(exc, (TransportError, ProtocolError)):
            return EXIT_EXTERNAL
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
