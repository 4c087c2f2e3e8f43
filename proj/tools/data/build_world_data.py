#!/usr/bin/env python3
"""Regenerate data/world/ from public datasets.

Inputs:
  * Natural Earth 1:50m admin-0 countries as TopoJSON, as shipped by the
    `world-atlas` npm package (countries-50m.json, public domain).
  * GeoNames city and country dumps, as shipped by the `geonamescache` PyPI
    package (data/cities500.json, data/countries.json, CC-BY 4.0).

Outputs (in --out):
  cities.csv       iso2,city,lat,lon,population   (top --per-country cities)
  borders.geojson  FeatureCollection, one feature per iso2 with properties
                   {iso2, name}; Polygon or MultiPolygon geometry
  regions.csv      iso2,region  (Africa/Americas/Asia/Europe/Oceania)

Usage:
  npm pack world-atlas@2 && tar xzf world-atlas-2.*.tgz
  pip download geonamescache --no-deps && unzip geonamescache-*.whl
  python3 tools/data/build_world_data.py \
      --topojson package/countries-50m.json \
      --geonames geonamescache/data --out data/world
"""

import argparse
import csv
import json
import os

CONTINENT_TO_REGION = {
    "AF": "Africa",
    "NA": "Americas",
    "SA": "Americas",
    "AS": "Asia",
    "EU": "Europe",
    "OC": "Oceania",
}

# Natural Earth features without an ISO numeric code.
NAME_TO_ISO2 = {"Kosovo": "XK"}


def decode_arcs(topo):
    sx, sy = topo["transform"]["scale"]
    tx, ty = topo["transform"]["translate"]
    arcs = []
    for arc in topo["arcs"]:
        x = y = 0
        pts = []
        for dx, dy in arc:
            x += dx
            y += dy
            pts.append((x * sx + tx, y * sy + ty))
        arcs.append(pts)
    return arcs


def ring_coords(ring, arcs):
    out = []
    for idx in ring:
        pts = arcs[idx] if idx >= 0 else list(reversed(arcs[~idx]))
        if out:
            pts = pts[1:]
        out.extend(pts)
    return out


def clean_ring(coords):
    cleaned = []
    for lon, lat in coords:
        p = [round(lon, 5), round(lat, 5)]
        if not cleaned or cleaned[-1] != p:
            cleaned.append(p)
    if len(cleaned) > 1 and cleaned[0] == cleaned[-1]:
        cleaned.pop()
    if len({tuple(p) for p in cleaned}) < 3:
        return None
    cleaned.append(cleaned[0])
    return cleaned


def polygons_of(geom, arcs):
    if geom["type"] == "Polygon":
        raw = [geom["arcs"]]
    elif geom["type"] == "MultiPolygon":
        raw = geom["arcs"]
    else:
        return []
    polys = []
    for poly in raw:
        rings = [clean_ring(ring_coords(r, arcs)) for r in poly]
        if rings and rings[0] is not None:
            polys.append([r for r in rings if r is not None])
    return polys


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--topojson", required=True)
    ap.add_argument("--geonames", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--per-country", type=int, default=25)
    args = ap.parse_args()

    countries = json.load(open(os.path.join(args.geonames, "countries.json")))
    numeric_to_iso2 = {int(c["isonumeric"]): iso for iso, c in countries.items()}

    topo = json.load(open(args.topojson))
    arcs = decode_arcs(topo)
    by_iso2 = {}
    names = {}
    for g in topo["objects"]["countries"]["geometries"]:
        name = g.get("properties", {}).get("name", "")
        iso2 = None
        if g.get("id") is not None:
            iso2 = numeric_to_iso2.get(int(g["id"]))
        if iso2 is None:
            iso2 = NAME_TO_ISO2.get(name)
        if iso2 is None:
            continue
        polys = polygons_of(g, arcs)
        if not polys:
            continue
        by_iso2.setdefault(iso2, []).extend(polys)
        names.setdefault(iso2, countries[iso2]["name"] if iso2 in countries else name)

    features = []
    for iso2 in sorted(by_iso2):
        polys = by_iso2[iso2]
        geom = ({"type": "Polygon", "coordinates": polys[0]} if len(polys) == 1
                else {"type": "MultiPolygon", "coordinates": polys})
        features.append({"type": "Feature",
                         "properties": {"iso2": iso2, "name": names[iso2]},
                         "geometry": geom})
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "borders.geojson"), "w") as f:
        json.dump({"type": "FeatureCollection", "features": features}, f,
                  separators=(",", ":"))
        f.write("\n")

    cities = json.load(open(os.path.join(args.geonames, "cities500.json")))
    per_country = {}
    for c in cities.values():
        if c["population"] <= 0:
            continue
        per_country.setdefault(c["countrycode"], []).append(c)
    with open(os.path.join(args.out, "cities.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["iso2", "city", "lat", "lon", "population"])
        for iso2 in sorted(per_country):
            if iso2 not in countries or countries[iso2]["continentcode"] not in CONTINENT_TO_REGION:
                continue
            top = sorted(per_country[iso2], key=lambda c: (-c["population"], c["name"]))
            for c in top[: args.per_country]:
                w.writerow([iso2, c["name"], f'{c["latitude"]:.5f}',
                            f'{c["longitude"]:.5f}', c["population"]])

    with open(os.path.join(args.out, "regions.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["iso2", "region"])
        for iso2 in sorted(countries):
            region = CONTINENT_TO_REGION.get(countries[iso2]["continentcode"])
            if region:
                w.writerow([iso2, region])


if __name__ == "__main__":
    main()
