"""Check reports, axiom suites, run reports and the acceptance sweep."""
