"""Packages hosted in this repository"""
