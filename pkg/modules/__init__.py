# -*- coding: utf-8 -*-
"""
PFC-Contact - контакт твёрдых тел по полю давления
Поля проникновения на тетраэдральных сетках, поверхность контакта,
тяги, энергия и простая симуляция
"""

__version__ = "1.0.0"
__author__ = "PFC Team"
