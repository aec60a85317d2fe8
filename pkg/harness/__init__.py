"""
Experiment harness

ε 스윕 실행, 수렴 속도 피팅, 결과 보고
"""
