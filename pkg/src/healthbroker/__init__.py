"""Patient-controlled encrypted health-record broker.

Documents are encrypted client-side under attribute policies, split into
threshold shares across user-chosen storage backends, and mediated through
an access-control layer with immediate revocation.  Every request and every
broker action land in two audit streams that a continuous inspector
cross-matches for signs of compromise.
"""

__version__ = "0.1.0"
