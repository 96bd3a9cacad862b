"""Generates the committed synthetic fixtures:
  - forecasts.jsonl        20 participants, 120 forecasts, labeled violations
  - forecasts_expected.json   construction-derived filter counts
  - filter_fixture.jsonl    10 hand-written records exercising every filter
  - filter_fixture_expected.json
  - cases_synthetic.csv     case-count export shaped like a health-department
                            file (district rows, cumulative counts, reporting
                            artifacts, one downward revision)
Deterministic; rerunning reproduces identical bytes."""
import json
import math
import datetime as dt
from pathlib import Path

from durcast_ref import (MT19937_64, discretize_mixture, median_bin, bin_date,
                         make_prediction, classify)

DATA = Path(__file__).resolve().parent.parent / "data"
T0 = dt.date(2021, 11, 29)

ROUND1 = (dt.date(2021, 11, 12), dt.date(2022, 2, 3))
ROUND2 = (dt.date(2021, 12, 3), dt.date(2022, 2, 25))


def record_line(rec):
    return json.dumps(rec, separators=(",", ":"), sort_keys=False)


def point_pmf(bin_index):
    pmf = [0.0] * 101
    pmf[bin_index] = 1.0
    return pmf


def margin_ok(components, window_days):
    """The median bin must be decided by a clear cumulative margin so that
    any last-ulp float divergence cannot flip it."""
    pmf = discretize_mixture(components, window_days)
    cum = 0.0
    for p in pmf:
        prev = cum
        cum += p
        if cum >= 0.5:
            return (cum - 0.5) > 1e-6 and (0.5 - prev) > 1e-6
    return False


def make_forecasts():
    rng = MT19937_64(20211129)
    ws, we = ROUND2
    window_days = (we - ws).days
    forecast_open = dt.date(2021, 12, 3)

    def rnd():
        return rng.canonical()

    valid = []
    attempts = 0
    while len(valid) < 114:
        attempts += 1
        pid = "p%02d" % (len(valid) % 19 + 1) if len(valid) < 19 else "p%02d" % (int(rnd() * 19) + 1)
        made = forecast_open + dt.timedelta(days=int(rnd() * 22))
        # drifting consensus: rises to mid forecasting window, then falls,
        # with a late upturn
        u = (made - forecast_open).days / 21.0
        trend = 33.0 + 26.0 * math.sin(min(1.0, u * 1.35) * math.pi * 0.92)
        center = trend + (rnd() - 0.5) * 14.0 - (ws - T0).days  # days from window start
        k = 1 + int(rnd() * 3)
        comps = []
        wsum = 0.0
        for i in range(k):
            c = {
                "center": round(center + (rnd() - 0.5) * 6.0, 3),
                "left_width": round(1.5 + rnd() * 6.0, 3),
                "right_width": round(1.5 + rnd() * 6.0, 3),
                "weight": round(0.2 + rnd() * 0.8, 6),
            }
            wsum += c["weight"]
            comps.append(c)
        scale = sum(c["weight"] for c in comps)
        for c in comps[:-1]:
            c["weight"] = round(c["weight"] / scale, 9)
        comps[-1]["weight"] = round(1.0 - sum(c["weight"] for c in comps[:-1]), 9)
        if not margin_ok(comps, window_days):
            continue
        hh = 8 + int(rnd() * 12)
        mm = int(rnd() * 60)
        rec = {
            "participant_id": pid,
            "created_at": "%sT%02d:%02d:00Z" % (made.isoformat(), hh, mm),
            "window_start": ws.isoformat(),
            "window_end": we.isoformat(),
            "mixture": comps,
        }
        if classify(make_prediction(rec, T0), T0) != "keep":
            continue
        valid.append(rec)

    r1s, r1e = ROUND1
    violations = [
        # left end-point forecast (bin 0 median)
        {"participant_id": "p01", "created_at": "2021-12-05T09:15:00Z",
         "window_start": ws.isoformat(), "window_end": we.isoformat(),
         "pmf": point_pmf(0)},
        # right end-point forecast (bin 100 median)
        {"participant_id": "p02", "created_at": "2021-12-06T10:30:00Z",
         "window_start": ws.isoformat(), "window_end": we.isoformat(),
         "pmf": point_pmf(100)},
        # predicted date before the wave start
        {"participant_id": "p03", "created_at": "2021-12-01T11:00:00Z",
         "window_start": r1s.isoformat(), "window_end": r1e.isoformat(),
         "pmf": point_pmf(5)},
        # forecast made before the wave start
        {"participant_id": "p04", "created_at": "2021-11-20T14:45:00Z",
         "window_start": r1s.isoformat(), "window_end": r1e.isoformat(),
         "pmf": point_pmf(60)},
        # theoretically impossible: predicted before the prediction date
        {"participant_id": "p20", "created_at": "2021-12-20T16:00:00Z",
         "window_start": ws.isoformat(), "window_end": we.isoformat(),
         "pmf": point_pmf(9)},
        {"participant_id": "p20", "created_at": "2021-12-22T17:20:00Z",
         "window_start": ws.isoformat(), "window_end": we.isoformat(),
         "pmf": point_pmf(11)},
    ]
    expected_kinds = ["endpoint", "endpoint", "pre_t0", "pre_t0", "impossible", "impossible"]
    for rec, kind in zip(violations, expected_kinds):
        got = classify(make_prediction(rec, T0), T0)
        assert got == kind, (rec["participant_id"], got, kind)

    slots = [13, 37, 55, 71, 89, 103]
    records = list(valid)
    for slot, rec in zip(slots, violations):
        records.insert(slot, rec)
    assert len(records) == 120

    ids = {r["participant_id"] for r in records}
    assert len(ids) == 20, len(ids)

    with open(DATA / "forecasts.jsonl", "w") as f:
        for rec in records:
            f.write(record_line(rec) + "\n")

    kept = sum(1 for r in records if classify(make_prediction(r, T0), T0) == "keep")
    kept_ids = {r["participant_id"] for r in records
                if classify(make_prediction(r, T0), T0) == "keep"}
    expected = {
        "input_count": 120,
        "removed_endpoint": 2,
        "removed_pre_t0": 2,
        "removed_impossible": 2,
        "output_count": kept,
        "participants_in": len(ids),
        "participants_out": len(kept_ids),
    }
    assert expected["output_count"] == 114
    assert expected["participants_out"] == 19
    with open(DATA / "forecasts_expected.json", "w") as f:
        json.dump(expected, f, indent=2)
        f.write("\n")


def make_filter_fixture():
    r1s, r1e = ROUND1
    ws, we = ROUND2

    def rec(pid, created, window, **dist):
        out = {"participant_id": pid, "created_at": created,
               "window_start": window[0].isoformat(), "window_end": window[1].isoformat()}
        out.update(dist)
        return out

    mix_a = [{"center": 38.0, "left_width": 4.0, "right_width": 4.0, "weight": 1.0}]
    mix_b = [{"center": 30.0, "left_width": 3.0, "right_width": 5.0, "weight": 0.6},
             {"center": 45.0, "left_width": 2.5, "right_width": 2.5, "weight": 0.4}]
    for m, window in ((mix_a, ROUND1), (mix_b, ROUND1)):
        assert margin_ok(m, (window[1] - window[0]).days)

    records = [
        rec("a", "2021-12-01T08:00:00Z", ROUND1, pmf=point_pmf(0)),     # left endpoint
        rec("b", "2021-12-01T09:00:00Z", ROUND1, pmf=point_pmf(100)),   # right endpoint
        rec("c", "2021-12-01T10:00:00Z", ROUND1, pmf=point_pmf(5)),     # predicted pre-t0
        rec("d", "2021-11-15T11:00:00Z", ROUND1, pmf=point_pmf(60)),    # made pre-t0
        rec("e", "2022-01-10T12:00:00Z", ROUND1, pmf=point_pmf(41)),    # impossible
        rec("a", "2021-12-05T13:00:00Z", ROUND1, mixture=mix_a),
        rec("b", "2021-12-06T14:00:00Z", ROUND1, mixture=mix_b),
        rec("f", "2021-12-07T15:00:00Z", ROUND1, pmf=point_pmf(70)),
        rec("f", "2021-12-08T16:00:00Z", ROUND1, pmf=point_pmf(72)),
        rec("g", "2021-12-20T17:00:00Z", ROUND2, pmf=point_pmf(21)),    # zero horizon
    ]
    expected_kinds = ["endpoint", "endpoint", "pre_t0", "pre_t0", "impossible",
                      "keep", "keep", "keep", "keep", "keep"]
    for r, kind in zip(records, expected_kinds):
        got = classify(make_prediction(r, T0), T0)
        assert got == kind, (r["participant_id"], got, kind)
    # the zero-horizon record predicts its own creation day
    p10 = make_prediction(records[9], T0)
    assert p10["horizon"] == 0 and p10["predicted_date"] == dt.date(2021, 12, 20)

    with open(DATA / "filter_fixture.jsonl", "w") as f:
        for r in records:
            f.write(record_line(r) + "\n")
    expected = {
        "input_count": 10,
        "removed_endpoint": 2,
        "removed_pre_t0": 2,
        "removed_impossible": 1,
        "output_count": 5,
        "participants_in": 7,
        "participants_out": 4,
    }
    with open(DATA / "filter_fixture_expected.json", "w") as f:
        json.dump(expected, f, indent=2)
        f.write("\n")


def daily_incidence(day):
    t = (day - dt.date(2021, 8, 1)).days
    autumn = 3200.0 * math.exp(-0.5 * ((t - 45.0) / 38.0) ** 2) + 700.0
    tp = (dt.date(2022, 1, 13) - dt.date(2021, 8, 1)).days
    s = 9.0 if t <= tp else 13.0
    winter = 17500.0 * math.exp(-0.5 * ((t - tp) / s) ** 2)
    base = autumn + winter
    wd = day.weekday()
    factor = {0: 1.06, 1: 1.10, 2: 1.04, 3: 1.02, 4: 0.98, 5: 0.85, 6: 0.75}[wd]
    if dt.date(2021, 11, 25) <= day <= dt.date(2021, 11, 28):
        factor *= 0.45
    elif dt.date(2021, 11, 29) <= day <= dt.date(2021, 11, 30):
        factor *= 1.9
    elif day == dt.date(2021, 12, 8):
        factor *= 0.35
    elif day == dt.date(2021, 12, 9):
        factor *= 1.65
    texture = (1.0 + 0.07 * math.sin(t * 1.7) + 0.05 * math.sin(t * 0.49 + 1.0)
               + 0.03 * math.sin(t * 0.23 + 2.4))
    return max(0.0, base * factor * texture)


DISTRICTS = [
    ("51059", "Fairfax", "Fairfax", 0.5, 351204),
    ("51760", "Richmond City", "Richmond", 0.3, 210722),
    ("51710", "Norfolk", "Norfolk", 0.2, 140481),
]


def make_cases():
    start = dt.date(2021, 8, 1)
    end = dt.date(2022, 2, 28)
    rows = []
    cumulative = [d[4] for d in DISTRICTS]
    day = start
    while day <= end:
        total = round(daily_incidence(day))
        if day == dt.date(2021, 10, 6):
            total = -50  # upstream quality-assurance revision
        alloc = [round(total * DISTRICTS[i][3]) for i in (1, 2)]
        deltas = [total - alloc[0] - alloc[1], alloc[0], alloc[1]]
        for i in range(3):
            cumulative[i] += deltas[i]
            fips, locality, district, _, _ = DISTRICTS[i]
            hosp = cumulative[i] // 40
            deaths = cumulative[i] // 250
            rows.append("%02d/%02d/%d,%s,%s,%s,%d,%d,%d" %
                        (day.month, day.day, day.year, fips, locality, district,
                         cumulative[i], hosp, deaths))
        day += dt.timedelta(days=1)
    with open(DATA / "cases_synthetic.csv", "w") as f:
        f.write("Report Date,FIPS,Locality,VDH Health District,Total Cases,"
                "Hospitalizations,Deaths\n")
        f.write("\n".join(rows) + "\n")


if __name__ == "__main__":
    DATA.mkdir(parents=True, exist_ok=True)
    make_forecasts()
    make_filter_fixture()
    make_cases()
    print("fixtures written to", DATA)
