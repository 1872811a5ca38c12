"""Robust deployment strategies: scenario bank, master problem and cutting planes"""
