"""Exact constructions and checks for extrinsic symplectic symmetric spaces"""
