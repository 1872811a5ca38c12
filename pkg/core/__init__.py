"""Epidemic simulation, cost models, LP solver and staffing maps"""
