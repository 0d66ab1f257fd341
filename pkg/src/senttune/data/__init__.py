"""Versioned data files: stopwords, stem rules, lexicons, generator specs."""
