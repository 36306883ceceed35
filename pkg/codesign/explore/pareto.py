#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# pareto.py
#
#   Nondominated set of designs over (qor, fps, efficiency), all three
#   maximized. Designs with identical objective vectors do not dominate
#   each other and are all kept.
#
#######################################################################


def design_objectives(design):
    """ (qor, fps, efficiency) of a CandidateDesign, or a plain 3-sequence as is """
    if hasattr(design, "qos"):
        return (design.qor, design.qos.fps, design.qos.efficiency)
    return tuple(design)


def dominates(a, b):
    """ True if objective vector A is >= B everywhere and > B somewhere """
    return all(x >= y for x, y in zip(a, b)) and any(x > y for x, y in zip(a, b))


class ParetoSet:
    """ Incrementally maintained nondominated set, members kept in insertion order """

    def __init__(self, key=design_objectives):
        self.key = key
        self.members = []

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def insert(self, design):
        """ Add DESIGN unless an incumbent dominates it; returns whether it was added """
        vector = self.key(design)
        if any(dominates(self.key(m), vector) for m in self.members):
            return False
        self.members = [m for m in self.members if not dominates(vector, self.key(m))]
        self.members.append(design)
        return True


def pareto_insert(pareto_set, design):
    accepted = pareto_set.insert(design)
    return pareto_set, accepted


def nondominated(designs, key=design_objectives):
    """ Brute-force filter: the designs no other design dominates, in input order """
    vectors = [key(d) for d in designs]
    return [
        d
        for d, v in zip(designs, vectors)
        if not any(dominates(other, v) for other in vectors)
    ]
