from django.urls import path

from . import views

urlpatterns = [
    path('runs/', views.run_list, name='run_list'),
    path('runs/<int:pk>/export/csv/', views.export_run_csv, name='export_run_csv'),
    path('runs/<int:pk>/export/excel/', views.export_run_excel, name='export_run_excel'),
]
