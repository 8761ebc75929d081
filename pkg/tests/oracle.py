"""Independent term-by-term reference for the analytic rates.

Deliberately plain scalar Python: head fractions come from the cluster-count
route (covering count / population), corona totals from the explicit
head/member split, and relay totals from separate receive and send terms.
No code is shared with the package's closed forms, so agreement between the
two is a real check.
"""

import math


def corona_rows(spec, widths, improved=False):
    """Per-corona dict of independently computed quantities."""
    radii = []
    acc = 0.0
    for c in widths:
        acc += c
        radii.append(acc)
    rows = []
    l = spec.data_rate
    for i, c in enumerate(widths):
        r = radii[i]
        r_in = radii[i - 1] if i > 0 else 0.0
        population = spec.density * math.pi * (r * r - r_in * r_in)
        covering = 2.0 * math.pi * r / c
        share = covering / population
        d = c if (not improved or i == 0) else widths[i - 1]
        head = (spec.gen_energy * l
                + (1.0 / share - 1.0) * spec.elec_energy * l
                + spec.agg_energy * l / share
                + spec.compression * l * (spec.amp_energy * d * d + spec.elec_energy) / share)
        member = spec.gen_energy * l + l * (spec.amp_energy * c * c + spec.elec_energy)
        intra = population * share * head + population * (1.0 - share) * member
        if i == len(widths) - 1:
            volume = 0.0
        else:
            volume = spec.density * math.pi * (spec.radius ** 2 - r * r) * spec.compression * l
        receive = volume * spec.elec_energy
        send = volume * (spec.elec_energy + spec.amp_energy * d * d)
        rows.append({
            "population": population,
            "covering": covering,
            "share": share,
            "distance": d,
            "head": head,
            "member": member,
            "intra": intra,
            "inter": receive + send,
        })
    return rows


def total_energy(spec, widths, improved=False):
    return sum(row["intra"] + row["inter"] for row in corona_rows(spec, widths, improved))


def total_cost(spec, cost, widths, improved=False):
    rows = corona_rows(spec, widths, improved)
    hardware = cost.hw_cost * spec.density * math.pi * spec.radius ** 2
    energy = 0.0
    for row in rows:
        per_node = (row["intra"] + row["inter"]) / row["population"] + spec.mgmt_energy
        energy += row["population"] * per_node * spec.lifetime
    return hardware + cost.energy_cost * energy + cost.sink_cost
